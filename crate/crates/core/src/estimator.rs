//! Per-interaction, workload and fleet energy estimates.
//!
//! Estimates come from one of two sources: fitted phase polynomials, or the
//! analytic roofline model of a [`ModelSpec`] on a [`HardwareProfile`]
//! combined with the profile's per-phase powers.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, InvalidInput};
use crate::phase_model::{
    energy_from_power, eval_decode_energy, eval_decode_latency, eval_prefill_energy,
    eval_prefill_latency, Phase, PhaseCoefficients,
};
use crate::roofline::HardwareProfile;
use crate::xformer::{predict_decode_latency, predict_prefill_latency, ModelSpec};

pub const DEFAULT_LED_WATTS: f64 = 5.0;
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, PartialEq)]
pub enum EnergySource {
    Fitted(PhaseCoefficients),
    Analytic {
        model: ModelSpec,
        hw: HardwareProfile,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FittedCoefficients,
    AnalyticRoofline,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::FittedCoefficients => "fitted-coeffs",
            Provenance::AnalyticRoofline => "analytic-roofline",
        })
    }
}

/// Average host-side power draw, charged over the whole interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentPowers {
    pub cpu_w: f64,
    pub ram_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentSplit {
    /// Equal to the breakdown's `total_wh`.
    pub gpu_wh: f64,
    pub cpu_wh: f64,
    pub ram_wh: f64,
}

impl ComponentSplit {
    pub fn total(&self) -> f64 {
        self.gpu_wh + self.cpu_wh + self.ram_wh
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub prefill_wh: f64,
    pub decode_wh: f64,
    /// Always `prefill_wh + decode_wh`.
    pub total_wh: f64,
    pub prefill_s: f64,
    pub decode_s: f64,
    pub components: Option<ComponentSplit>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

impl EnergyBreakdown {
    fn new(
        prefill_wh: f64,
        decode_wh: f64,
        prefill_s: f64,
        decode_s: f64,
        provenance: Provenance,
        warnings: Vec<String>,
    ) -> Self {
        EnergyBreakdown {
            prefill_wh,
            decode_wh,
            total_wh: prefill_wh + decode_wh,
            prefill_s,
            decode_s,
            components: None,
            provenance,
            warnings,
        }
    }

    fn with_components(mut self, p: &ComponentPowers) -> Self {
        let hours = (self.prefill_s + self.decode_s) / 3600.0;
        self.components = Some(ComponentSplit {
            gpu_wh: self.total_wh,
            cpu_wh: p.cpu_w * hours,
            ram_wh: p.ram_w * hours,
        });
        self
    }
}

/// An [`EnergySource`] with optional host component powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub source: EnergySource,
    pub component_powers: Option<ComponentPowers>,
}

impl Estimator {
    pub fn new(source: EnergySource) -> Self {
        Estimator {
            source,
            component_powers: None,
        }
    }

    pub fn with_component_powers(mut self, p: ComponentPowers) -> Self {
        self.component_powers = Some(p);
        self
    }

    /// Energy of one request with `s` prompt tokens and `g` decode tokens.
    pub fn interaction(&self, s: u64, g: u64) -> Result<EnergyBreakdown, InvalidInput> {
        if s == 0 || g == 0 {
            return Err(InvalidInput::Precondition(format!(
                "interaction needs s >= 1 and g >= 1, got s={s} g={g}"
            )));
        }
        let b = match &self.source {
            EnergySource::Fitted(c) => {
                let mut warnings = Vec::new();
                let pt = eval_prefill_latency(&c.prefill_latency, s);
                let pe = eval_prefill_energy(&c.prefill_energy, s);
                let dt = eval_decode_latency(&c.decode_latency, s, g);
                let de = eval_decode_energy(&c.decode_energy, s, g);
                if pt <= 0.0 || pe <= 0.0 {
                    warnings.push(format!("prefill polynomial nonpositive at s={s}"));
                }
                if dt.out_of_range {
                    warnings.push(format!(
                        "decode latency polynomial nonpositive at s={s} g={g}"
                    ));
                }
                if de.out_of_range {
                    warnings.push(format!(
                        "decode energy polynomial nonpositive at s={s} g={g}"
                    ));
                }
                EnergyBreakdown::new(
                    pe,
                    de.value,
                    pt,
                    dt.value,
                    Provenance::FittedCoefficients,
                    warnings,
                )
            }
            EnergySource::Analytic { model, hw } => {
                let pt = predict_prefill_latency(model, hw, s)?.total_seconds;
                let dt = predict_decode_latency(model, hw, s, g)?.total_seconds;
                EnergyBreakdown::new(
                    energy_from_power(Phase::Prefill, pt, hw),
                    energy_from_power(Phase::Decode, dt, hw),
                    pt,
                    dt,
                    Provenance::AnalyticRoofline,
                    Vec::new(),
                )
            }
        };
        Ok(match &self.component_powers {
            Some(p) => b.with_components(p),
            None => b,
        })
    }

    pub fn workload(&self, workload: &WorkloadSpec) -> Result<WorkloadEstimate, InvalidInput> {
        let entries = workload.entries()?;
        let rows = entries
            .iter()
            .map(|e| Ok((*e, self.interaction(e.s, e.g)?)))
            .collect::<Result<Vec<_>, InvalidInput>>()?;
        let wsum: f64 = entries.iter().map(|e| e.weight).sum();
        let mean = |f: fn(&EnergyBreakdown) -> f64| {
            rows.iter().map(|(e, b)| e.weight * f(b)).sum::<f64>() / wsum
        };
        let mut warnings: Vec<String> = Vec::new();
        for (_, b) in &rows {
            for w in &b.warnings {
                if !warnings.contains(w) {
                    warnings.push(w.clone());
                }
            }
        }
        let mut m = EnergyBreakdown::new(
            mean(|b| b.prefill_wh),
            mean(|b| b.decode_wh),
            mean(|b| b.prefill_s),
            mean(|b| b.decode_s),
            rows[0].1.provenance,
            warnings,
        );
        if rows[0].1.components.is_some() {
            let c = |f: fn(&ComponentSplit) -> f64| {
                rows.iter()
                    .map(|(e, b)| e.weight * b.components.as_ref().map(f).unwrap_or(0.0))
                    .sum::<f64>()
                    / wsum
            };
            m.components = Some(ComponentSplit {
                gpu_wh: m.total_wh,
                cpu_wh: c(|x| x.cpu_wh),
                ram_wh: c(|x| x.ram_wh),
            });
        }
        Ok(WorkloadEstimate { mean: m, rows })
    }
}

pub fn estimate_interaction(
    source: &EnergySource,
    s: u64,
    g: u64,
) -> Result<EnergyBreakdown, InvalidInput> {
    Estimator::new(source.clone()).interaction(s, g)
}

pub fn estimate_workload(
    source: &EnergySource,
    workload: &WorkloadSpec,
) -> Result<WorkloadEstimate, InvalidInput> {
    Estimator::new(source.clone()).workload(workload)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadEntry {
    pub s: u64,
    /// Decode tokens.
    pub g: u64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Lognormal `s` and `g` with the given means and standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricWorkload {
    pub s_mean: f64,
    pub s_std: f64,
    pub g_mean: f64,
    pub g_std: f64,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WorkloadSpec {
    Entries(Vec<WorkloadEntry>),
    Parametric(ParametricWorkload),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    entry: Option<Vec<WorkloadEntry>>,
    parametric: Option<ParametricWorkload>,
}

fn lognormal(mean: f64, std: f64) -> Result<LogNormal<f64>, InvalidInput> {
    let sigma2 = (1.0 + (std / mean).powi(2)).ln();
    LogNormal::new(mean.ln() - sigma2 / 2.0, sigma2.sqrt())
        .map_err(|e| InvalidInput::Precondition(format!("lognormal: {e}")))
}

impl WorkloadSpec {
    pub fn single(s: u64, g: u64) -> Self {
        WorkloadSpec::Entries(vec![WorkloadEntry { s, g, weight: 1.0 }])
    }

    /// Parses either `[[entry]]` tables or one `[parametric]` table.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawWorkload = toml::from_str(text)?;
        let spec = match (raw.entry, raw.parametric) {
            (Some(e), None) => WorkloadSpec::Entries(e),
            (None, Some(p)) => WorkloadSpec::Parametric(p),
            _ => {
                return Err(InvalidInput::Precondition(
                    "workload needs either [[entry]] tables or a [parametric] table".into(),
                )
                .into())
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        match self {
            WorkloadSpec::Entries(es) => {
                if es.is_empty() {
                    return Err(InvalidInput::field("entry", "need at least one entry"));
                }
                for e in es {
                    if e.s == 0 || e.g == 0 {
                        return Err(InvalidInput::field("entry", "s and g must be >= 1"));
                    }
                    if !(e.weight.is_finite() && e.weight > 0.0) {
                        return Err(InvalidInput::field("weight", "must be finite and > 0"));
                    }
                }
            }
            WorkloadSpec::Parametric(p) => {
                if p.count == 0 {
                    return Err(InvalidInput::field("count", "must be >= 1"));
                }
                for (f, m, sd) in [("s", p.s_mean, p.s_std), ("g", p.g_mean, p.g_std)] {
                    if !(m.is_finite() && m >= 1.0 && sd.is_finite() && sd >= 0.0) {
                        return Err(InvalidInput::field(
                            if f == "s" { "s_mean" } else { "g_mean" },
                            "mean must be >= 1 and std >= 0",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Concrete entries; parametric workloads are sampled deterministically
    /// from their seed, rounded to whole tokens and clamped to at least 1.
    pub fn entries(&self) -> Result<Vec<WorkloadEntry>, InvalidInput> {
        self.validate()?;
        match self {
            WorkloadSpec::Entries(es) => Ok(es.clone()),
            WorkloadSpec::Parametric(p) => {
                let ds = lognormal(p.s_mean, p.s_std)?;
                let dg = lognormal(p.g_mean, p.g_std)?;
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
                Ok((0..p.count)
                    .map(|_| WorkloadEntry {
                        s: (ds.sample(&mut rng).round() as u64).max(1),
                        g: (dg.sample(&mut rng).round() as u64).max(1),
                        weight: 1.0,
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadEstimate {
    /// Weighted mean over the entries.
    pub mean: EnergyBreakdown,
    pub rows: Vec<(WorkloadEntry, EnergyBreakdown)>,
}

/// Minutes a lamp of `led_watts` runs on `wh`.
pub fn led_equivalent_minutes(wh: f64, led_watts: f64) -> Result<f64, InvalidInput> {
    if !(wh.is_finite() && wh >= 0.0) {
        return Err(InvalidInput::field("wh", "must be finite and >= 0"));
    }
    if !(led_watts.is_finite() && led_watts > 0.0) {
        return Err(InvalidInput::field("led_watts", "must be finite and > 0"));
    }
    Ok(wh / led_watts * 60.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FleetEstimate {
    pub kwh_per_day: f64,
    pub mwh_per_year: f64,
}

pub fn fleet_extrapolate(
    per_interaction_wh: f64,
    interactions_per_day: f64,
) -> Result<FleetEstimate, InvalidInput> {
    for (f, v) in [
        ("per_interaction_wh", per_interaction_wh),
        ("interactions_per_day", interactions_per_day),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(InvalidInput::field(f, "must be finite and >= 0"));
        }
    }
    let kwh_per_day = per_interaction_wh * interactions_per_day / 1000.0;
    let mwh_per_year = kwh_per_day * DAYS_PER_YEAR / 1000.0;
    if !(kwh_per_day.is_finite() && mwh_per_year.is_finite()) {
        return Err(InvalidInput::Precondition(
            "fleet energy overflows f64".into(),
        ));
    }
    Ok(FleetEstimate {
        kwh_per_day,
        mwh_per_year,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub n_params: u64,
    pub mean_total_wh: f64,
    /// Mean total energy over mean decode tokens.
    pub wh_per_token: f64,
}

/// Energy of one model at one generation length, for contour plots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub name: String,
    pub n_params: u64,
    pub s: u64,
    pub g: u64,
    pub total_wh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison {
    pub rows: Vec<ComparisonRow>,
    /// Evaluated at the workload's weighted mean prompt length.
    pub grid: Vec<GridPoint>,
}

/// Analytic comparison of several models on one workload; rows and grid
/// are ordered by parameter count.
pub fn compare_models(
    specs: &[ModelSpec],
    hw: &HardwareProfile,
    workload: &WorkloadSpec,
    grid_g: &[u64],
) -> Result<ModelComparison, InvalidInput> {
    if specs.is_empty() {
        return Err(InvalidInput::Precondition("need at least one model".into()));
    }
    let entries = workload.entries()?;
    let wsum: f64 = entries.iter().map(|e| e.weight).sum();
    let mean_g = entries.iter().map(|e| e.weight * e.g as f64).sum::<f64>() / wsum;
    let mean_s = entries.iter().map(|e| e.weight * e.s as f64).sum::<f64>() / wsum;
    let grid_s = (mean_s.round() as u64).max(1);

    let mut sorted: Vec<&ModelSpec> = specs.iter().collect();
    sorted.sort_by_key(|m| m.n_params());
    let mut out = ModelComparison {
        rows: Vec::new(),
        grid: Vec::new(),
    };
    for m in sorted {
        let est = Estimator::new(EnergySource::Analytic {
            model: m.clone(),
            hw: hw.clone(),
        });
        let total = est.workload(workload)?.mean.total_wh;
        out.rows.push(ComparisonRow {
            name: m.name().to_string(),
            n_params: m.n_params(),
            mean_total_wh: total,
            wh_per_token: total / mean_g,
        });
        for &g in grid_g {
            out.grid.push(GridPoint {
                name: m.name().to_string(),
                n_params: m.n_params(),
                s: grid_s,
                g,
                total_wh: est.interaction(grid_s, g)?.total_wh,
            });
        }
    }
    Ok(out)
}
