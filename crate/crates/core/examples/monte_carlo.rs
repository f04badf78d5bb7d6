//! Sample the protocol and compare against exact statistics.
//!
//! Run: cargo run --release --example monte_carlo -- [iterations] [seed]

use lsqkd::{depolarizing_attack, exact_statistics, simulate_protocol, ProtocolConfig};

fn main() -> lsqkd::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().map_or(1_000_000, |s| s.parse().expect("iterations"));
    let seed = args.next().map_or(7, |s| s.parse().expect("seed"));

    let attack = depolarizing_attack(0.05)?;
    let exact = exact_statistics(&attack);
    let cfg = ProtocolConfig {
        iterations,
        seed,
        ..Default::default()
    };
    let outcome = simulate_protocol(&attack, &cfg)?;
    let counts = outcome.statistics.counts.as_ref().expect("sampled statistics carry counts");

    println!("{:<10} {:>10} {:>10} {:>8} {:>6}", "entry", "exact", "sampled", "n", "z");
    let row = |name: String, p: f64, sampled: f64, n: u64| {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let z = if sigma > 0.0 { (sampled - p) / sigma } else { 0.0 };
        println!("{name:<10} {p:>10.6} {sampled:>10.6} {n:>8} {z:>6.2}");
    };
    for i in 0..3 {
        let n = counts.pf[i][0] + counts.pf[i][1];
        row(format!("pf[{i}]"), exact.pf[i][0], outcome.statistics.pf[i][0], n);
        let n = counts.pr[i][0] + counts.pr[i][1];
        row(format!("pr[{i}]"), exact.pr[i][0], outcome.statistics.pr[i][0], n);
    }

    let key = outcome.raw_key_summary();
    let expected = iterations as f64 * cfg.p * cfg.q;
    println!();
    println!("raw key {} bits (expected {expected:.0}), error rate {:.5}", key.length, key.error_rate);
    Ok(())
}
