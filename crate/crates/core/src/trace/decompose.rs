//! Phase decomposition: decode = full run minus prefill-only run.

use std::collections::HashMap;
use std::ops::{Add, Sub};

use serde::Serialize;

use super::{RunKind, RunRecord};
use crate::phase_model::LatencySample;

/// Energy split across the measured hardware components, in Wh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ComponentEnergy {
    pub gpu: f64,
    pub cpu: f64,
    pub ram: f64,
}

impl ComponentEnergy {
    pub fn total(&self) -> f64 {
        self.gpu + self.cpu + self.ram
    }

    fn scale(self, k: f64) -> Self {
        ComponentEnergy {
            gpu: self.gpu * k,
            cpu: self.cpu * k,
            ram: self.ram * k,
        }
    }
}

impl Add for ComponentEnergy {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ComponentEnergy {
            gpu: self.gpu + o.gpu,
            cpu: self.cpu + o.cpu,
            ram: self.ram + o.ram,
        }
    }
}

impl Sub for ComponentEnergy {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ComponentEnergy {
            gpu: self.gpu - o.gpu,
            cpu: self.cpu - o.cpu,
            ram: self.ram - o.ram,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionFlag {
    /// Some component of the derived decode energy is below zero.
    NegativeDecode,
    /// Mean full-run latency does not exceed the prefill-only latency.
    NegativeDecodeLatency,
    /// Runs of the prompt disagree on `input_tokens`.
    InconsistentTokens,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptDecomposition {
    pub prompt_id: String,
    pub input_tokens: u64,
    /// Mean output length of the full runs.
    pub mean_output_tokens: f64,
    /// Tokens produced by the decode phase: rounded mean output minus the
    /// one token the prefill already emitted.
    pub decode_tokens: u64,
    pub prefill: ComponentEnergy,
    pub full: ComponentEnergy,
    pub decode: ComponentEnergy,
    pub prefill_latency_s: f64,
    pub full_latency_s: f64,
    pub decode_latency_s: f64,
    pub n_prefill_runs: usize,
    pub n_full_runs: usize,
    pub flags: Vec<DecompositionFlag>,
}

impl PromptDecomposition {
    pub fn has_flag(&self, f: DecompositionFlag) -> bool {
        self.flags.contains(&f)
    }
}

/// A prompt lacking one of the two run kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingKind {
    pub prompt_id: String,
    pub missing: RunKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Decomposition {
    /// In order of first appearance in the trace.
    pub prompts: Vec<PromptDecomposition>,
    pub missing: Vec<MissingKind>,
}

#[derive(Default)]
struct Group<'a> {
    prefill: Vec<&'a RunRecord>,
    full: Vec<&'a RunRecord>,
}

fn mean_energy(runs: &[&RunRecord]) -> ComponentEnergy {
    let sum = runs
        .iter()
        .fold(ComponentEnergy::default(), |acc, r| acc + r.energy());
    sum.scale(1.0 / runs.len() as f64)
}

fn mean_of(runs: &[&RunRecord], f: impl Fn(&RunRecord) -> f64) -> f64 {
    runs.iter().map(|r| f(r)).sum::<f64>() / runs.len() as f64
}

/// Groups records by prompt and subtracts the mean prefill-only run from
/// the mean full run, component by component.
pub fn decompose(records: &[RunRecord]) -> Decomposition {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Group> = HashMap::new();
    for r in records {
        let g = groups.entry(&r.prompt_id).or_insert_with(|| {
            order.push(&r.prompt_id);
            Group::default()
        });
        match r.run_kind {
            RunKind::PrefillOnly => g.prefill.push(r),
            RunKind::Full => g.full.push(r),
        }
    }

    let mut out = Decomposition::default();
    for id in order {
        let g = &groups[id];
        if g.prefill.is_empty() {
            out.missing.push(MissingKind {
                prompt_id: id.to_string(),
                missing: RunKind::PrefillOnly,
            });
            continue;
        }
        if g.full.is_empty() {
            out.missing.push(MissingKind {
                prompt_id: id.to_string(),
                missing: RunKind::Full,
            });
            continue;
        }
        let prefill = mean_energy(&g.prefill);
        let full = mean_energy(&g.full);
        let decode = full - prefill;
        let prefill_latency_s = mean_of(&g.prefill, |r| r.latency_s);
        let full_latency_s = mean_of(&g.full, |r| r.latency_s);
        let mean_output_tokens = mean_of(&g.full, |r| r.output_tokens as f64);

        let mut flags = Vec::new();
        if decode.gpu < 0.0 || decode.cpu < 0.0 || decode.ram < 0.0 {
            flags.push(DecompositionFlag::NegativeDecode);
        }
        if full_latency_s <= prefill_latency_s {
            flags.push(DecompositionFlag::NegativeDecodeLatency);
        }
        let input_tokens = g.prefill[0].input_tokens;
        if g.prefill
            .iter()
            .chain(&g.full)
            .any(|r| r.input_tokens != input_tokens)
        {
            flags.push(DecompositionFlag::InconsistentTokens);
        }

        out.prompts.push(PromptDecomposition {
            prompt_id: id.to_string(),
            input_tokens,
            mean_output_tokens,
            decode_tokens: (mean_output_tokens.round() as u64).saturating_sub(1),
            prefill,
            full,
            decode,
            prefill_latency_s,
            full_latency_s,
            decode_latency_s: full_latency_s - prefill_latency_s,
            n_prefill_runs: g.prefill.len(),
            n_full_runs: g.full.len(),
            flags,
        });
    }
    out
}

/// Maps records one-to-one to samples: prefill-only runs become `g = 0`,
/// full runs `g = output_tokens` with the whole-run latency and GPU energy.
pub fn records_to_samples(records: &[RunRecord]) -> Vec<LatencySample> {
    records
        .iter()
        .map(|r| LatencySample {
            s: r.input_tokens,
            g: match r.run_kind {
                RunKind::PrefillOnly => 0,
                RunKind::Full => r.output_tokens,
            },
            t: r.latency_s,
            energy_wh: Some(r.gpu_wh),
        })
        .collect()
}

/// Inverse of [`records_to_samples`] for samples carrying an energy; CPU
/// and RAM energies are zero.
pub fn samples_to_records(samples: &[LatencySample], model_id: &str) -> Vec<RunRecord> {
    samples
        .iter()
        .enumerate()
        .map(|(i, x)| RunRecord {
            prompt_id: format!("synth-{i}"),
            run_kind: if x.g == 0 {
                RunKind::PrefillOnly
            } else {
                RunKind::Full
            },
            input_tokens: x.s,
            output_tokens: x.g.max(1),
            latency_s: x.t,
            gpu_wh: x.energy_wh.unwrap_or(0.0),
            cpu_wh: 0.0,
            ram_wh: 0.0,
            model_id: model_id.to_string(),
            precision: "fp32".into(),
            batch: 1,
        })
        .collect()
}

/// Per-phase fit samples from decompositions: one prefill sample per
/// prompt and one decode sample for prompts with at least one decode
/// token and a positive decode latency. Energy is taken from `energy`.
pub fn decomposition_samples(
    decomposition: &Decomposition,
    energy: impl Fn(&ComponentEnergy) -> f64,
) -> Vec<LatencySample> {
    let mut out = Vec::new();
    for p in &decomposition.prompts {
        out.push(LatencySample {
            s: p.input_tokens,
            g: 0,
            t: p.prefill_latency_s,
            energy_wh: Some(energy(&p.prefill)),
        });
        if p.decode_tokens >= 1 && p.decode_latency_s > 0.0 {
            out.push(LatencySample {
                s: p.input_tokens,
                g: p.decode_tokens,
                t: p.decode_latency_s,
                energy_wh: Some(energy(&p.decode)),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, kind: RunKind, out: u64, lat: f64, gpu: f64, cpu: f64, ram: f64) -> RunRecord {
        RunRecord {
            prompt_id: id.into(),
            run_kind: kind,
            input_tokens: 100,
            output_tokens: out,
            latency_s: lat,
            gpu_wh: gpu,
            cpu_wh: cpu,
            ram_wh: ram,
            model_id: "m".into(),
            precision: "fp32".into(),
            batch: 1,
        }
    }

    #[test]
    fn subtracts_means() {
        let rs = vec![
            rec("p", RunKind::PrefillOnly, 1, 0.1, 0.01, 0.001, 0.0005),
            rec("p", RunKind::PrefillOnly, 1, 0.3, 0.03, 0.003, 0.0015),
            rec("p", RunKind::Full, 51, 2.0, 0.2, 0.02, 0.01),
            rec("p", RunKind::Full, 51, 2.2, 0.22, 0.02, 0.01),
        ];
        let d = decompose(&rs);
        assert!(d.missing.is_empty());
        let p = &d.prompts[0];
        assert_eq!(p.n_prefill_runs, 2);
        assert!((p.prefill.gpu - 0.02).abs() < 1e-15);
        assert!((p.decode.gpu - 0.19).abs() < 1e-15);
        assert!((p.decode_latency_s - 1.9).abs() < 1e-12);
        assert_eq!(p.decode_tokens, 50);
        assert!(p.flags.is_empty());
    }

    #[test]
    fn flags_and_missing() {
        let rs = vec![
            rec("neg", RunKind::PrefillOnly, 1, 0.5, 0.05, 0.0, 0.0),
            rec("neg", RunKind::Full, 3, 0.4, 0.04, 0.0, 0.0),
            rec("only_full", RunKind::Full, 3, 0.4, 0.04, 0.0, 0.0),
            rec("only_prefill", RunKind::PrefillOnly, 1, 0.4, 0.04, 0.0, 0.0),
        ];
        let d = decompose(&rs);
        assert_eq!(d.prompts.len(), 1);
        assert!(d.prompts[0].has_flag(DecompositionFlag::NegativeDecode));
        assert!(d.prompts[0].has_flag(DecompositionFlag::NegativeDecodeLatency));
        assert_eq!(
            d.missing,
            vec![
                MissingKind {
                    prompt_id: "only_full".into(),
                    missing: RunKind::PrefillOnly
                },
                MissingKind {
                    prompt_id: "only_prefill".into(),
                    missing: RunKind::Full
                },
            ]
        );
        let samples = decomposition_samples(&d, |e| e.gpu);
        assert_eq!(samples.len(), 1, "negative decode latency is not a sample");
    }

    #[test]
    fn records_samples_roundtrip() {
        let samples = vec![
            LatencySample {
                s: 10,
                g: 0,
                t: 0.1,
                energy_wh: Some(0.01),
            },
            LatencySample {
                s: 20,
                g: 7,
                t: 0.5,
                energy_wh: Some(0.02),
            },
        ];
        let back = records_to_samples(&samples_to_records(&samples, "m"));
        assert_eq!(back, samples);
    }
}
