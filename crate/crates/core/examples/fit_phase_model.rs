//! Generates noisy synthetic measurements from the reference coefficients
//! and fits all four phase polynomials back.
//!
//! ```text
//! cargo run --example fit_phase_model
//! ```

use llm_energy::phase_model::{
    fit_decode_energy, fit_decode_latency, fit_prefill_energy, fit_prefill_latency, synth_generate,
    PhaseCoefficients, SynthPlan, SynthSource,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = PhaseCoefficients::reference();
    let source = SynthSource::from(truth);
    let mut samples = synth_generate(
        &source,
        &SynthPlan::uniform(500, (100, 4000), (0, 0), 1),
        0.01,
        2,
    );
    samples.extend(synth_generate(
        &source,
        &SynthPlan::uniform(500, (100, 4000), (1, 256), 3),
        0.01,
        4,
    ));

    let pl = fit_prefill_latency(&samples)?;
    let dl = fit_decode_latency(&samples)?;
    let pe = fit_prefill_energy(&samples)?;
    let de = fit_decode_energy(&samples)?;
    let fitted = PhaseCoefficients {
        prefill_latency: pl.coeffs,
        decode_latency: dl.coeffs,
        prefill_energy: pe.coeffs,
        decode_energy: de.coeffs,
    };

    let rows = [
        (
            "alpha",
            truth.prefill_latency.alpha,
            fitted.prefill_latency.alpha,
        ),
        ("eta", truth.decode_latency.eta, fitted.decode_latency.eta),
        ("a", truth.prefill_energy.a, fitted.prefill_energy.a),
        ("c", truth.decode_energy.c, fitted.decode_energy.c),
    ];
    println!(
        "{:<6} {:>11} {:>11} {:>8}",
        "coeff", "truth", "fitted", "error"
    );
    for (name, t, f) in rows {
        println!(
            "{name:<6} {t:>11.4e} {f:>11.4e} {:>7.2}%",
            100.0 * (f - t) / t
        );
    }
    println!(
        "\nr^2: prefill {:.5}  decode {:.5}  (condition {:.1} / {:.1})",
        pl.fit.r_squared, dl.fit.r_squared, pl.fit.condition_estimate, dl.fit.condition_estimate
    );
    println!("\nfitted coefficient file:\n{}", fitted.to_kv_string());
    Ok(())
}
