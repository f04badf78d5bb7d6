//! Bisect for the noise level where the key rate reaches zero.
//!
//! Run: cargo run --release --example noise_thresholds

use std::time::Instant;

use lsqkd::{find_threshold, ScenarioKind, ThresholdOptions};

fn main() -> lsqkd::Result<()> {
    for kind in [ScenarioKind::IndependentDepolarizing, ScenarioKind::Dependent] {
        let start = Instant::now();
        let report = find_threshold(kind, &ThresholdOptions::default())?;
        println!(
            "{kind:<12} Q* = {:.5}  bracket [{:.5}, {:.5}]  {} probes  {:.1?}",
            report.threshold,
            report.bracket.0,
            report.bracket.1,
            report.probes.len(),
            start.elapsed()
        );
    }
    Ok(())
}
