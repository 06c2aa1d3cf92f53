//! Reads the bundled trace, splits every prompt into prefill and decode
//! energy, and summarizes each phase.
//!
//! ```text
//! cargo run --example decompose_trace
//! ```

use llm_energy::data;
use llm_energy::estimator::{led_equivalent_minutes, DEFAULT_LED_WATTS};
use llm_energy::trace::{
    aggregate_decompositions, aggregate_records, decompose, parse_str, DecompositionFlag,
    IngestOptions, RunKind, TraceFormat, TracePhase,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = parse_str(
        data::THANK_YOU_FIXTURE,
        TraceFormat::Delimited,
        &IngestOptions::default(),
    )?;
    println!(
        "{} records, {} malformed lines",
        trace.records.len(),
        trace.errors.len()
    );

    let d = decompose(&trace.records);
    let negative = d
        .prompts
        .iter()
        .filter(|p| p.has_flag(DecompositionFlag::NegativeDecode))
        .count();
    println!(
        "{} prompts decomposed, {} missing a run kind, {negative} with negative decode",
        d.prompts.len(),
        d.missing.len()
    );

    let full = aggregate_records(&trace.records, RunKind::Full)?;
    println!("\nfull generations");
    for (name, s) in [("gpu", full.gpu), ("cpu", full.cpu), ("ram", full.ram)] {
        println!(
            "  {name}  {:.3} +/- {:.3} Wh  [{:.3}, {:.3}]",
            s.mean, s.std, s.min, s.max
        );
    }
    println!(
        "  total {:.3} Wh, {:.2} min of a {DEFAULT_LED_WATTS} W LED",
        full.total_mean,
        led_equivalent_minutes(full.total_mean, DEFAULT_LED_WATTS)?
    );

    for phase in [TracePhase::Prefill, TracePhase::Decode] {
        let s = aggregate_decompositions(&d, phase)?;
        println!(
            "{phase:?}: gpu {:.4} Wh, total {:.4} Wh",
            s.gpu.mean, s.total_mean
        );
    }

    let p = &d.prompts[0];
    println!(
        "\nprompt {}: s={} decode tokens={} prefill {:.4} Wh decode {:.4} Wh",
        p.prompt_id, p.input_tokens, p.decode_tokens, p.prefill.gpu, p.decode.gpu
    );
    Ok(())
}
