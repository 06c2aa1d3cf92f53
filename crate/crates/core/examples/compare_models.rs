//! Analytic energy across model sizes on one workload, plus the size x
//! generation-length grid.
//!
//! ```text
//! cargo run --example compare_models
//! ```

use llm_energy::data;
use llm_energy::estimator::{compare_models, WorkloadSpec};
use llm_energy::xformer::size_scaling_curve;
use llm_energy::HardwareProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hw = HardwareProfile::h100_sxm_fp32();
    let mut models = data::qwen_family();
    models.push(data::llama_8b());
    models.push(data::mistral_7b());

    let workload = WorkloadSpec::single(600, 90);
    let grid_g = [64, 128, 256];
    let cmp = compare_models(&models, &hw, &workload, &grid_g)?;
    println!(
        "{:<16} {:>10} {:>10} {:>12}",
        "model", "params", "Wh", "Wh/token"
    );
    for r in &cmp.rows {
        println!(
            "{:<16} {:>10.3e} {:>10.4} {:>12.3e}",
            r.name, r.n_params as f64, r.mean_total_wh, r.wh_per_token
        );
    }

    println!("\nWh at s={} by generation length", cmp.grid[0].s);
    print!("{:<16}", "model");
    for g in grid_g {
        print!(" {:>8}", format!("g={g}"));
    }
    println!();
    for row in cmp.grid.chunks(grid_g.len()) {
        print!("{:<16}", row[0].name);
        for p in row {
            print!(" {:>8.4}", p.total_wh);
        }
        println!();
    }

    println!("\ndecode-only scaling at s=600, g=90");
    for r in size_scaling_curve(&data::qwen_family(), &hw, 600, 90)? {
        println!(
            "  {:<14} h={:<5} N={:<3} {:.3} s {:.4} Wh",
            r.name, r.hidden, r.n_layers, r.decode_seconds, r.decode_wh
        );
    }
    Ok(())
}
