//! Deterministic synthetic samples drawn from known coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    eval_decode_energy, eval_decode_latency, eval_prefill_energy, eval_prefill_latency,
    DecodeEnergyCoeffs, DecodeLatencyCoeffs, LatencySample, PhaseCoefficients, PrefillEnergyCoeffs,
    PrefillLatencyCoeffs,
};

/// Ground-truth coefficients for [`synth_generate`]. Energies are attached
/// to every sample when `energy` is present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSource {
    pub prefill_latency: PrefillLatencyCoeffs,
    pub decode_latency: DecodeLatencyCoeffs,
    pub energy: Option<(PrefillEnergyCoeffs, DecodeEnergyCoeffs)>,
}

impl From<PhaseCoefficients> for SynthSource {
    fn from(c: PhaseCoefficients) -> Self {
        SynthSource {
            prefill_latency: c.prefill_latency,
            decode_latency: c.decode_latency,
            energy: Some((c.prefill_energy, c.decode_energy)),
        }
    }
}

/// `(s, g)` points to sample; `g == 0` yields a prefill-only sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPlan {
    pub points: Vec<(u64, u64)>,
}

impl SynthPlan {
    /// Cartesian product of prompt and generation lengths.
    pub fn grid(s_values: &[u64], g_values: &[u64]) -> Self {
        let points = s_values
            .iter()
            .flat_map(|&s| g_values.iter().map(move |&g| (s, g)))
            .collect();
        SynthPlan { points }
    }

    /// `n` points with `s` and `g` uniform over the inclusive ranges.
    pub fn uniform(n: usize, s: (u64, u64), g: (u64, u64), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| (rng.gen_range(s.0..=s.1), rng.gen_range(g.0..=g.1)))
            .collect();
        SynthPlan { points }
    }
}

/// Evaluates the source polynomials at every plan point and perturbs each
/// value by an independent factor `1 + noise·N(0, 1)`.
///
/// `noise == 0` returns the exact polynomial values. Points where a
/// polynomial is nonpositive are emitted as-is; keep plans inside the
/// fitted range.
pub fn synth_generate(
    source: &SynthSource,
    plan: &SynthPlan,
    noise: f64,
    seed: u64,
) -> Vec<LatencySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |v: f64| {
        if noise == 0.0 {
            v
        } else {
            let z: f64 = rng.sample(StandardNormal);
            v * (1.0 + noise * z)
        }
    };
    plan.points
        .iter()
        .map(|&(s, g)| {
            let (t, e) = if g == 0 {
                (
                    eval_prefill_latency(&source.prefill_latency, s),
                    source.energy.map(|(pe, _)| eval_prefill_energy(&pe, s)),
                )
            } else {
                (
                    eval_decode_latency(&source.decode_latency, s, g).value,
                    source
                        .energy
                        .map(|(_, de)| eval_decode_energy(&de, s, g).value),
                )
            };
            LatencySample {
                s,
                g,
                t: perturb(t),
                energy_wh: e.map(&mut perturb),
            }
        })
        .collect()
}
