//! Latency and boundedness of single kernels on the bundled H100 profile.
//!
//! ```text
//! cargo run --example roofline
//! ```

use llm_energy::roofline::{boundedness, effective_ceilings, op_latency, total_latency};
use llm_energy::{HardwareProfile, OpCost};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hw = HardwareProfile::h100_sxm_fp32();
    let (f_eff, b_eff) = effective_ceilings(&hw);
    println!(
        "{}: F_eff {:.3e} FLOP/s, B_eff {:.3e} B/s",
        hw.name(),
        f_eff,
        b_eff
    );
    println!("ridge point {:.1} FLOP/B\n", f_eff / b_eff);

    // a 4096x4096 fp32 projection applied to 1 and to 1000 tokens
    let w = 4096.0 * 4096.0 * 4.0;
    let ops = [
        OpCost::new("gemv", 2.0 * 4096.0 * 4096.0, w + 2.0 * 4096.0 * 4.0)?,
        OpCost::new(
            "gemm",
            2.0 * 1000.0 * 4096.0 * 4096.0,
            w + 2.0 * 1000.0 * 4096.0 * 4.0,
        )?,
        OpCost::new("elementwise", 4096.0 * 1000.0, 2.0 * 4096.0 * 1000.0 * 4.0)?,
    ];
    println!(
        "{:<12} {:>10} {:>12} {:>14}",
        "op", "AI", "latency_s", "bound"
    );
    for op in &ops {
        println!(
            "{:<12} {:>10.2} {:>12.3e} {:>14}",
            op.label(),
            op.arithmetic_intensity(),
            op_latency(op, &hw),
            boundedness(op, &hw).to_string()
        );
    }
    println!("\nserial total {:.3e} s", total_latency(&ops, &hw));

    let tuned = hw.with_efficiency(0.9, 0.9)?;
    println!(
        "with mu = 0.9 the gemm takes {:.3e} s",
        op_latency(&ops[1], &tuned)
    );
    Ok(())
}
