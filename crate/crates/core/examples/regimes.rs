//! Where prefill latency turns from overhead-dominated to linear to
//! quadratic in prompt length.
//!
//! ```text
//! cargo run --example regimes
//! ```

use llm_energy::phase_model::{
    eval_prefill_latency, quadratic_crossover, regime_classify, PhaseCoefficients, RegimeThresholds,
};

fn main() {
    let c = PhaseCoefficients::reference().prefill_latency;
    let t = RegimeThresholds::default();
    println!(
        "thresholds: constant up to {}, quadratic from {}",
        t.constant_max, t.quadratic_min
    );
    println!(
        "beta*s^2 overtakes alpha*s at s = {:.1}\n",
        quadratic_crossover(&c)
    );

    println!(
        "{:>7} {:>10} {:>8} {:>8} {:>8}  regime",
        "s", "latency_s", "linear", "square", "const"
    );
    for s in [10u64, 50, 100, 500, 2000, 10_000, 27_180, 40_000, 100_000] {
        let x = s as f64;
        let total = eval_prefill_latency(&c, s);
        println!(
            "{s:>7} {total:>10.4} {:>7.1}% {:>7.1}% {:>7.1}%  {:?}",
            100.0 * c.alpha * x / total,
            100.0 * c.beta * x * x / total,
            100.0 * c.gamma / total,
            regime_classify(s)
        );
    }
}
