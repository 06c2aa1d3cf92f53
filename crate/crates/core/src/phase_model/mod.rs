//! Closed-form latency and energy polynomials for the prefill and decode
//! phases.
//!
//! ```text
//! t_prefill(s)    = alpha·s + beta·s² + gamma
//! t_decode(s, g)  = eta·g + theta·s·g + phi·g² + rho
//! E_prefill(s)    = a·s + b
//! E_decode(s, g)  = c·g + d·s·g + g_intercept
//! ```
//!
//! `s` is the prompt length and `g` the number of decode steps. Latencies
//! are in seconds, energies in Wh.

mod fit;
mod synth;

pub use fit::{
    fit_decode_energy, fit_decode_latency, fit_prefill_energy, fit_prefill_latency, Fitted,
    LatencySample,
};
pub use synth::{synth_generate, SynthPlan, SynthSource};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::roofline::HardwareProfile;

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefillLatencyCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeLatencyCoeffs {
    pub eta: f64,
    pub theta: f64,
    pub phi: f64,
    /// May be negative.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefillEnergyCoeffs {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeEnergyCoeffs {
    pub c: f64,
    pub d: f64,
    /// May be negative.
    pub g_intercept: f64,
}

fn nonneg(vals: &[f64]) -> bool {
    vals.iter().all(|v| v.is_finite() && *v >= 0.0)
}

impl PrefillLatencyCoeffs {
    /// Slope and curvature are nonnegative.
    pub fn is_valid(&self) -> bool {
        nonneg(&[self.alpha, self.beta]) && self.gamma.is_finite()
    }
}

impl DecodeLatencyCoeffs {
    pub fn is_valid(&self) -> bool {
        nonneg(&[self.eta, self.theta, self.phi]) && self.rho.is_finite()
    }
}

impl PrefillEnergyCoeffs {
    pub fn is_valid(&self) -> bool {
        nonneg(&[self.a]) && self.b.is_finite()
    }
}

impl DecodeEnergyCoeffs {
    pub fn is_valid(&self) -> bool {
        nonneg(&[self.c, self.d]) && self.g_intercept.is_finite()
    }
}

/// All four coefficient sets; the unit of the coefficient file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseCoefficients {
    pub prefill_latency: PrefillLatencyCoeffs,
    pub decode_latency: DecodeLatencyCoeffs,
    pub prefill_energy: PrefillEnergyCoeffs,
    pub decode_energy: DecodeEnergyCoeffs,
}

impl PhaseCoefficients {
    /// The bundled LLaMA-3.1-8B FP32 / H100 coefficients.
    pub fn reference() -> Self {
        Self::from_kv_str(crate::data::REFERENCE_COEFFS).expect("bundled coefficients are valid")
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// Key-value text with every value in scientific notation.
    pub fn to_kv_string(&self) -> String {
        let pl = &self.prefill_latency;
        let dl = &self.decode_latency;
        let pe = &self.prefill_energy;
        let de = &self.decode_energy;
        format!(
            "[prefill_latency]\nalpha = {:e}\nbeta = {:e}\ngamma = {:e}\n\n\
             [decode_latency]\neta = {:e}\ntheta = {:e}\nphi = {:e}\nrho = {:e}\n\n\
             [prefill_energy]\na = {:e}\nb = {:e}\n\n\
             [decode_energy]\nc = {:e}\nd = {:e}\ng_intercept = {:e}\n",
            pl.alpha,
            pl.beta,
            pl.gamma,
            dl.eta,
            dl.theta,
            dl.phi,
            dl.rho,
            pe.a,
            pe.b,
            de.c,
            de.d,
            de.g_intercept
        )
    }
}

/// A polynomial evaluation together with its range check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Set when the fitted polynomial predicts a nonpositive quantity, which
    /// happens below its fitting range because of negative intercepts.
    pub out_of_range: bool,
}

impl Evaluation {
    fn checked(value: f64) -> Self {
        Evaluation {
            value,
            out_of_range: value <= 0.0,
        }
    }
}

pub fn eval_prefill_latency(c: &PrefillLatencyCoeffs, s: u64) -> f64 {
    let s = s as f64;
    c.alpha * s + c.beta * s * s + c.gamma
}

pub fn eval_decode_latency(c: &DecodeLatencyCoeffs, s: u64, g: u64) -> Evaluation {
    let (s, g) = (s as f64, g as f64);
    Evaluation::checked(c.eta * g + c.theta * s * g + c.phi * g * g + c.rho)
}

pub fn eval_prefill_energy(c: &PrefillEnergyCoeffs, s: u64) -> f64 {
    c.a * s as f64 + c.b
}

pub fn eval_decode_energy(c: &DecodeEnergyCoeffs, s: u64, g: u64) -> Evaluation {
    let (s, g) = (s as f64, g as f64);
    Evaluation::checked(c.c * g + c.d * s * g + c.g_intercept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Prefill,
    Decode,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Prefill => "prefill",
            Phase::Decode => "decode",
        })
    }
}

/// Energy in Wh of spending `seconds` in `phase` at the profile's mean
/// power for that phase.
pub fn energy_from_power(phase: Phase, seconds: f64, hw: &HardwareProfile) -> f64 {
    let watts = match phase {
        Phase::Prefill => hw.p_prefill(),
        Phase::Decode => hw.p_decode(),
    };
    seconds * watts / SECONDS_PER_HOUR
}

/// Deviation above which a consistency pair is flagged.
pub const CONSISTENCY_TOLERANCE: f64 = 0.10;

/// One energy coefficient compared against `power × latency coefficient`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyPair {
    /// e.g. `"alpha~a"`.
    pub pair: String,
    pub phase: Phase,
    pub energy_coeff: f64,
    /// `p_phase · latency_coeff / 3600`.
    pub power_derived: f64,
    /// `|energy_coeff − power_derived| / |power_derived|`.
    pub relative_deviation: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub pairs: Vec<ConsistencyPair>,
}

impl ConsistencyReport {
    pub fn pair(&self, name: &str) -> Option<&ConsistencyPair> {
        self.pairs.iter().find(|p| p.pair == name)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &ConsistencyPair> {
        self.pairs.iter().filter(|p| p.flagged)
    }
}

/// Checks that energy ≈ mean phase power × latency, term by term.
pub fn consistency_report(coeffs: &PhaseCoefficients, hw: &HardwareProfile) -> ConsistencyReport {
    let pl = &coeffs.prefill_latency;
    let dl = &coeffs.decode_latency;
    let pe = &coeffs.prefill_energy;
    let de = &coeffs.decode_energy;
    let entries = [
        ("alpha~a", Phase::Prefill, pe.a, pl.alpha),
        ("gamma~b", Phase::Prefill, pe.b, pl.gamma),
        ("eta~c", Phase::Decode, de.c, dl.eta),
        ("theta~d", Phase::Decode, de.d, dl.theta),
        ("rho~g_intercept", Phase::Decode, de.g_intercept, dl.rho),
    ];
    let pairs = entries
        .into_iter()
        .map(|(name, phase, energy, latency)| {
            let power_derived = energy_from_power(phase, latency, hw);
            let relative_deviation = (energy - power_derived).abs() / power_derived.abs();
            ConsistencyPair {
                pair: name.to_string(),
                phase,
                energy_coeff: energy,
                power_derived,
                relative_deviation,
                flagged: relative_deviation.is_nan() || relative_deviation > CONSISTENCY_TOLERANCE,
            }
        })
        .collect();
    ConsistencyReport { pairs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    Constant,
    Linear,
    Quadratic,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Constant => "constant",
            Regime::Linear => "linear",
            Regime::Quadratic => "quadratic",
        })
    }
}

/// Prompt-length boundaries of the prefill latency regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// Prompts up to this length are in the constant regime.
    pub constant_max: u64,
    /// Prompts longer than this are in the quadratic regime.
    pub quadratic_min: u64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            constant_max: 100,
            quadratic_min: 30_000,
        }
    }
}

pub fn regime_classify(s: u64) -> Regime {
    regime_classify_with(s, &RegimeThresholds::default())
}

pub fn regime_classify_with(s: u64, t: &RegimeThresholds) -> Regime {
    if s <= t.constant_max {
        Regime::Constant
    } else if s <= t.quadratic_min {
        Regime::Linear
    } else {
        Regime::Quadratic
    }
}

/// Prompt length at which the quadratic prefill term equals the linear one.
pub fn quadratic_crossover(c: &PrefillLatencyCoeffs) -> f64 {
    c.alpha / c.beta
}
