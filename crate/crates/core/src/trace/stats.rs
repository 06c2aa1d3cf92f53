//! Aggregate energy statistics and histograms.
//!
//! Standard deviations are population deviations (divide by `n`).

use std::io::Write;

use serde::Serialize;

use super::decompose::{ComponentEnergy, Decomposition};
use super::{RunKind, RunRecord};
use crate::error::TraceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Gpu,
    Cpu,
    Ram,
    Total,
}

impl Component {
    pub fn of(self, e: &ComponentEnergy) -> f64 {
        match self {
            Component::Gpu => e.gpu,
            Component::Cpu => e.cpu,
            Component::Ram => e.ram,
            Component::Total => e.total(),
        }
    }
}

impl std::str::FromStr for Component {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gpu" => Ok(Component::Gpu),
            "cpu" => Ok(Component::Cpu),
            "ram" => Ok(Component::Ram),
            "total" => Ok(Component::Total),
            other => Err(format!("unknown component `{other}` (gpu|cpu|ram|total)")),
        }
    }
}

/// Which slice of a decomposed trace to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TracePhase {
    Prefill,
    Decode,
    Full,
}

impl TracePhase {
    pub fn of(self, p: &super::PromptDecomposition) -> ComponentEnergy {
        match self {
            TracePhase::Prefill => p.prefill,
            TracePhase::Decode => p.decode,
            TracePhase::Full => p.full,
        }
    }
}

impl std::str::FromStr for TracePhase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prefill" => Ok(TracePhase::Prefill),
            "decode" => Ok(TracePhase::Decode),
            "full" => Ok(TracePhase::Full),
            other => Err(format!("unknown phase `{other}` (prefill|decode|full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Summary {
            // rounding can push the mean a hair outside [min, max]
            mean: mean.clamp(min, max),
            std: var.sqrt(),
            count: values.len(),
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyStats {
    pub gpu: Summary,
    pub cpu: Summary,
    pub ram: Summary,
    /// Sum of the three component means.
    pub total_mean: f64,
}

impl EnergyStats {
    fn from_energies(es: &[ComponentEnergy]) -> Result<Self, TraceError> {
        let col = |f: fn(&ComponentEnergy) -> f64| es.iter().map(f).collect::<Vec<_>>();
        let gpu = Summary::of(&col(|e| e.gpu)).ok_or(TraceError::EmptySelection)?;
        let cpu = Summary::of(&col(|e| e.cpu)).ok_or(TraceError::EmptySelection)?;
        let ram = Summary::of(&col(|e| e.ram)).ok_or(TraceError::EmptySelection)?;
        Ok(EnergyStats {
            total_mean: gpu.mean + cpu.mean + ram.mean,
            gpu,
            cpu,
            ram,
        })
    }

    pub fn component(&self, c: Component) -> Option<&Summary> {
        match c {
            Component::Gpu => Some(&self.gpu),
            Component::Cpu => Some(&self.cpu),
            Component::Ram => Some(&self.ram),
            Component::Total => None,
        }
    }
}

/// Statistics over the records of one run kind.
pub fn aggregate_records(records: &[RunRecord], kind: RunKind) -> Result<EnergyStats, TraceError> {
    let es: Vec<_> = records
        .iter()
        .filter(|r| r.run_kind == kind)
        .map(RunRecord::energy)
        .collect();
    EnergyStats::from_energies(&es)
}

/// Statistics over per-prompt means of one phase.
pub fn aggregate_decompositions(
    d: &Decomposition,
    phase: TracePhase,
) -> Result<EnergyStats, TraceError> {
    let es: Vec<_> = d.prompts.iter().map(|p| phase.of(p)).collect();
    EnergyStats::from_energies(&es)
}

#[derive(Debug, Clone)]
pub enum Bins {
    Count(usize),
    /// Strictly increasing; the outer two bins are open-ended.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub median: f64,
    /// Mean exceeds median.
    pub right_skewed: bool,
}

/// Bins `values`. With a bin count the range is `[min, max]` split evenly;
/// with explicit edges, values below the first or above the last edge land
/// in the outermost bins so that the counts always sum to `values.len()`.
pub fn histogram(values: &[f64], bins: &Bins) -> Result<Histogram, TraceError> {
    if values.is_empty() {
        return Err(TraceError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(TraceError::BadEdges);
    }
    let edges = match bins {
        Bins::Count(0) => return Err(TraceError::ZeroBins),
        Bins::Count(n) => {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let width = if max > min {
                (max - min) / *n as f64
            } else {
                1.0
            };
            let mut e: Vec<f64> = (0..=*n).map(|i| min + i as f64 * width).collect();
            if max > min {
                e[*n] = max;
            }
            e
        }
        Bins::Edges(e) => {
            if e.len() < 2 || e.iter().any(|x| !x.is_finite()) || e.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(TraceError::BadEdges);
            }
            e.clone()
        }
    };
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    for &v in values {
        // index of the last left edge <= v, clamped into range
        let i = edges[1..nb].partition_point(|&e| e <= v);
        counts[i] += 1;
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(Histogram {
        edges,
        counts,
        mean,
        median,
        right_skewed: mean > median,
    })
}

/// Two-column delimited text: `bin_left_edge,count`.
pub fn write_histogram<W: Write>(h: &Histogram, mut w: W) -> std::io::Result<()> {
    writeln!(w, "bin_left_edge,count")?;
    for (e, c) in h.edges.iter().zip(&h.counts) {
        writeln!(w, "{e:e},{c}")?;
    }
    Ok(())
}
