//! Per-class analytic costs of an 8B model, compared with the fitted
//! per-token latency slopes.
//!
//! ```text
//! cargo run --example transformer_costs
//! ```

use llm_energy::data;
use llm_energy::phase_model::PhaseCoefficients;
use llm_energy::xformer::{
    decode_boundedness, predict_decode_latency, predict_prefill_latency, prefill_boundedness,
};
use llm_energy::HardwareProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = data::llama_8b();
    let hw = HardwareProfile::h100_sxm_fp32();
    println!(
        "{}: {:.3e} parameters, {:.1} GB of fp32 weights",
        model.name(),
        model.n_params() as f64,
        model.weight_bytes() / 1e9
    );

    let s = 1000;
    let prefill = predict_prefill_latency(&model, &hw, s)?;
    println!(
        "\nprefill s={s}: {:.4} s, dominated by {}",
        prefill.total_seconds, prefill.dominant_class
    );
    let bounds = prefill_boundedness(&model, &hw, s)?;
    for (c, (_, b)) in prefill.classes.iter().zip(&bounds) {
        println!(
            "  {:<9} {:>9.3e} FLOP {:>9.3e} B {:>8.4} s  {b}",
            c.label,
            c.cost.flops(),
            c.cost.bytes(),
            c.seconds
        );
    }

    let g = 100;
    let decode = predict_decode_latency(&model, &hw, s, g)?;
    println!(
        "\ndecode s={s} g={g}: {:.3} s, dominated by {}",
        decode.total_seconds, decode.dominant_class
    );
    for (label, b) in decode_boundedness(&model, &hw, s)? {
        println!("  {label:<9} {b}");
    }

    // finite-difference slopes against the fitted coefficients
    let t = |s| predict_prefill_latency(&model, &hw, s).map(|b| b.total_seconds);
    let prefill_slope = (t(2000)? - t(1000)?) / 1000.0;
    let d = |g| predict_decode_latency(&model, &hw, 1, g).map(|b| b.total_seconds);
    let decode_slope = (d(101)? - d(1)?) / 100.0;
    let c = PhaseCoefficients::reference();
    println!(
        "\nper-token prefill {prefill_slope:.3e} s (fitted alpha {:.3e})",
        c.prefill_latency.alpha
    );
    println!(
        "per-token decode  {decode_slope:.3e} s (fitted eta   {:.3e})",
        c.decode_latency.eta
    );
    println!(
        "KV cache at 4096 tokens: {:.2} GB",
        model.kv_cache_bytes(4096) / 1e9
    );
    Ok(())
}
