//! Workload-averaged interaction energy scaled to a daily request volume.
//!
//! ```text
//! cargo run --example fleet
//! ```

use llm_energy::estimator::{
    fleet_extrapolate, led_equivalent_minutes, ComponentPowers, EnergySource, Estimator,
    ParametricWorkload, WorkloadSpec, DEFAULT_LED_WATTS,
};
use llm_energy::{data, HardwareProfile, PhaseCoefficients};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workload = WorkloadSpec::Parametric(ParametricWorkload {
        s_mean: 600.0,
        s_std: 300.0,
        g_mean: 90.0,
        g_std: 45.0,
        count: 2000,
        seed: 7,
    });

    let fitted = Estimator::new(EnergySource::Fitted(PhaseCoefficients::reference()))
        .with_component_powers(ComponentPowers {
            cpu_w: 40.0,
            ram_w: 30.0,
        });
    let analytic = Estimator::new(EnergySource::Analytic {
        model: data::llama_8b(),
        hw: HardwareProfile::h100_sxm_fp32(),
    });

    for (name, est) in [("fitted", &fitted), ("analytic", &analytic)] {
        let w = est.workload(&workload)?;
        let b = &w.mean;
        println!(
            "{name:<9} prefill {:.4} + decode {:.4} = {:.4} Wh ({:.2} LED-min), {} warnings",
            b.prefill_wh,
            b.decode_wh,
            b.total_wh,
            led_equivalent_minutes(b.total_wh, DEFAULT_LED_WATTS)?,
            b.warnings.len()
        );
        if let Some(c) = &b.components {
            println!(
                "          + host cpu {:.4} Wh, ram {:.4} Wh",
                c.cpu_wh, c.ram_wh
            );
        }
    }

    let per = fitted.workload(&workload)?.mean.total_wh;
    for daily in [1e6, 1e8, 1e9] {
        let f = fleet_extrapolate(per, daily)?;
        println!(
            "{daily:>8.0e}/day -> {:>12.1} kWh/day {:>10.1} MWh/yr",
            f.kwh_per_day, f.mwh_per_year
        );
    }
    Ok(())
}
