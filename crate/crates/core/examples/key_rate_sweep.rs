//! Key rate against noise for both scenario families.
//!
//! Run: cargo run --release --example key_rate_sweep

use lsqkd::{binary_entropy, key_rate, scenario_statistics, ConstraintMode, OptimizerOptions, ScenarioKind};

fn main() -> lsqkd::Result<()> {
    let opts = OptimizerOptions {
        restarts: 64,
        ..Default::default()
    };
    println!("{:>6} {:>12} {:>12} {:>12}", "Q", "independent", "dependent", "1-h(Qx)-h(Q)");
    for k in 0..=24 {
        let q = k as f64 * 0.005;
        let mut line = format!("{q:>6.3}");
        for kind in [ScenarioKind::IndependentDepolarizing, ScenarioKind::Dependent] {
            let r = key_rate(&scenario_statistics(q, kind)?, ConstraintMode::Full, &opts)?;
            line += &format!(" {:>12.6}", r.key_rate);
        }
        // symmetric-attack value for the independent family
        let kind = ScenarioKind::IndependentDepolarizing;
        let closed = 1.0 - binary_entropy(kind.q_x(q))? - binary_entropy(q)?;
        println!("{line} {closed:>12.6}");
    }
    Ok(())
}
