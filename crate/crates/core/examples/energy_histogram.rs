//! Histogram of per-generation GPU energy from the bundled trace, written
//! as `bin_left_edge,count` text.
//!
//! ```text
//! cargo run --example energy_histogram
//! ```

use llm_energy::data;
use llm_energy::trace::{
    histogram, parse_str, write_histogram, Bins, IngestOptions, RunKind, TraceFormat,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = parse_str(
        data::THANK_YOU_FIXTURE,
        TraceFormat::Delimited,
        &IngestOptions::default(),
    )?;
    let gpu: Vec<f64> = trace
        .records
        .iter()
        .filter(|r| r.run_kind == RunKind::Full)
        .map(|r| r.gpu_wh)
        .collect();

    let h = histogram(&gpu, &Bins::Count(12))?;
    write_histogram(&h, std::io::stdout().lock())?;
    let peak = h.counts.iter().copied().max().unwrap_or(1);
    println!();
    for (e, c) in h.edges.iter().zip(&h.counts) {
        println!("{e:>6.3} {}", "#".repeat(c * 40 / peak));
    }
    println!(
        "\nmean {:.4} Wh, median {:.4} Wh, right-skewed: {}",
        h.mean, h.median, h.right_skewed
    );
    Ok(())
}
