//! Least-squares fits of the phase polynomials from measured samples.
//!
//! Fits are unconstrained: the returned coefficients are whatever ordinary
//! least squares produces, and [`Fitted::valid`] records whether they satisfy
//! the sign conventions of their type. Negative intercepts are expected.

use serde::Serialize;

use super::{DecodeEnergyCoeffs, DecodeLatencyCoeffs, PrefillEnergyCoeffs, PrefillLatencyCoeffs};
use crate::error::{FitError, InvalidInput};
use crate::numerics::{ols_fit, DesignMatrix, FitResult};

/// One observation of a phase: `g == 0` marks a prefill-only run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencySample {
    pub s: u64,
    pub g: u64,
    /// Seconds.
    pub t: f64,
    pub energy_wh: Option<f64>,
}

impl LatencySample {
    /// Checks `s >= 1`, `t > 0` and a finite energy.
    pub fn new(s: u64, g: u64, t: f64, energy_wh: Option<f64>) -> Result<Self, InvalidInput> {
        if s == 0 {
            return Err(InvalidInput::field("s", "must be >= 1"));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(InvalidInput::field(
                "t",
                format!("must be finite and > 0, got {t}"),
            ));
        }
        if let Some(e) = energy_wh {
            if !e.is_finite() {
                return Err(InvalidInput::field("energy_wh", "must be finite"));
            }
        }
        Ok(LatencySample { s, g, t, energy_wh })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted<C> {
    pub coeffs: C,
    pub fit: FitResult,
    /// Coefficients satisfy their sign invariants.
    pub valid: bool,
}

fn run_fit(rows: Vec<Vec<f64>>, y: Vec<f64>, needed: usize) -> Result<FitResult, FitError> {
    if rows.len() < needed {
        return Err(FitError::InsufficientSamples {
            needed,
            got: rows.len(),
        });
    }
    let x = DesignMatrix::from_rows(&rows)?;
    Ok(ols_fit(&x, &y)?)
}

fn prefill_samples(samples: &[LatencySample]) -> impl Iterator<Item = &LatencySample> {
    samples.iter().filter(|x| x.g == 0)
}

fn decode_samples(samples: &[LatencySample]) -> impl Iterator<Item = &LatencySample> {
    samples.iter().filter(|x| x.g >= 1)
}

/// OLS over `{s, s², 1}` using the prefill-only samples.
pub fn fit_prefill_latency(
    samples: &[LatencySample],
) -> Result<Fitted<PrefillLatencyCoeffs>, FitError> {
    let (rows, y): (Vec<_>, Vec<_>) = prefill_samples(samples)
        .map(|x| {
            let s = x.s as f64;
            (vec![s, s * s, 1.0], x.t)
        })
        .unzip();
    let fit = run_fit(rows, y, 3)?;
    let c = &fit.coefficients;
    let coeffs = PrefillLatencyCoeffs {
        alpha: c[0],
        beta: c[1],
        gamma: c[2],
    };
    Ok(Fitted {
        valid: coeffs.is_valid(),
        coeffs,
        fit,
    })
}

/// OLS over `{g, s·g, g², 1}` using the samples with `g >= 1`.
pub fn fit_decode_latency(
    samples: &[LatencySample],
) -> Result<Fitted<DecodeLatencyCoeffs>, FitError> {
    let (rows, y): (Vec<_>, Vec<_>) = decode_samples(samples)
        .map(|x| {
            let (s, g) = (x.s as f64, x.g as f64);
            (vec![g, s * g, g * g, 1.0], x.t)
        })
        .unzip();
    let fit = run_fit(rows, y, 4)?;
    let c = &fit.coefficients;
    let coeffs = DecodeLatencyCoeffs {
        eta: c[0],
        theta: c[1],
        phi: c[2],
        rho: c[3],
    };
    Ok(Fitted {
        valid: coeffs.is_valid(),
        coeffs,
        fit,
    })
}

/// OLS over `{s, 1}` using prefill-only samples that carry an energy.
pub fn fit_prefill_energy(
    samples: &[LatencySample],
) -> Result<Fitted<PrefillEnergyCoeffs>, FitError> {
    let (rows, y): (Vec<_>, Vec<_>) = prefill_samples(samples)
        .filter_map(|x| x.energy_wh.map(|e| (vec![x.s as f64, 1.0], e)))
        .unzip();
    let fit = run_fit(rows, y, 2)?;
    let c = &fit.coefficients;
    let coeffs = PrefillEnergyCoeffs { a: c[0], b: c[1] };
    Ok(Fitted {
        valid: coeffs.is_valid(),
        coeffs,
        fit,
    })
}

/// OLS over `{g, s·g, 1}` using decode samples that carry an energy.
pub fn fit_decode_energy(
    samples: &[LatencySample],
) -> Result<Fitted<DecodeEnergyCoeffs>, FitError> {
    let (rows, y): (Vec<_>, Vec<_>) = decode_samples(samples)
        .filter_map(|x| {
            let (s, g) = (x.s as f64, x.g as f64);
            x.energy_wh.map(|e| (vec![g, s * g, 1.0], e))
        })
        .unzip();
    let fit = run_fit(rows, y, 3)?;
    let c = &fit.coefficients;
    let coeffs = DecodeEnergyCoeffs {
        c: c[0],
        d: c[1],
        g_intercept: c[2],
    };
    Ok(Fitted {
        valid: coeffs.is_valid(),
        coeffs,
        fit,
    })
}
