//! Checks each energy coefficient against phase power times the matching
//! latency coefficient.
//!
//! ```text
//! cargo run --example consistency
//! ```

use llm_energy::phase_model::{consistency_report, PhaseCoefficients, CONSISTENCY_TOLERANCE};
use llm_energy::HardwareProfile;

fn main() {
    let hw = HardwareProfile::h100_sxm_fp32();
    let report = consistency_report(&PhaseCoefficients::reference(), &hw);
    println!(
        "powers: prefill {} W, decode {} W; tolerance {:.0}%\n",
        hw.p_prefill(),
        hw.p_decode(),
        100.0 * CONSISTENCY_TOLERANCE
    );
    println!(
        "{:<16} {:>11} {:>11} {:>9}",
        "pair", "energy", "P*latency", "dev"
    );
    for p in &report.pairs {
        println!(
            "{:<16} {:>11.4e} {:>11.4e} {:>8.1}%{}",
            p.pair,
            p.energy_coeff,
            p.power_derived,
            100.0 * p.relative_deviation,
            if p.flagged { "  flagged" } else { "" }
        );
    }
    let n = report.flagged().count();
    println!("\n{n} of {} pairs flagged", report.pairs.len());
}
