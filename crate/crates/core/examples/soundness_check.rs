//! The certified bound never exceeds the true `S(A|E)` of the attack that
//! produced the statistics.
//!
//! Run: cargo run --release --example soundness_check -- [attacks]

use lsqkd::{exact_statistics, key_rate, random_attack, true_s_ae, ConstraintMode, OptimizerOptions};

fn main() -> lsqkd::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(40, |s| s.parse().expect("attack count"));
    let opts = OptimizerOptions {
        restarts: 48,
        ..Default::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..n {
        let d = 1 + (seed % 4) as usize;
        let attack = random_attack(d, seed)?;
        let truth = true_s_ae(&attack)?;
        let bound = key_rate(&exact_statistics(&attack), ConstraintMode::Full, &opts)?.s_ae_bound;
        worst = worst.max(bound - truth);
        println!("seed {seed:>3}  d_E = {d}  true {truth:.5}  bound {bound:.5}");
    }
    println!("largest bound - truth: {worst:.3e}");
    Ok(())
}
