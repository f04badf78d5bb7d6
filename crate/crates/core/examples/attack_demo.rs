//! The reflect-side attack that error rates cannot see.
//!
//! Eve leaves the forward channel alone and, on the way back, swaps the
//! qubit's Z value into her ancilla while sending `|+⟩`. A always measures
//! `+`, so neither basis shows errors, yet Eve knows every raw key bit.
//!
//! Run: cargo run --release --example attack_demo

use lsqkd::cli::attack_demo;
use lsqkd::{decompose_attack, exact_statistics, paper_attack, OptimizerOptions};

fn main() -> lsqkd::Result<()> {
    let attack = paper_attack();
    let stats = exact_statistics(&attack);
    println!("attack statistics:");
    for (i, label) in ["0", "1", "+"].iter().enumerate() {
        println!("  sent {label}: pf = {:?}  pr = {:?}", stats.pf[i], stats.pr[i]);
    }
    println!("  lambdas = {:?}", decompose_attack(&attack).lambdas());

    let d = attack_demo(&OptimizerOptions::default())?;
    println!();
    println!("true S(A|E)                         {:.3e}", d.true_s_ae);
    println!("Q_Z, Q_X                            {}, {}", d.q_z, d.q_x);
    println!("full-mode bound on these stats      {:.3e}", d.full_mode_bound);
    println!("error-events-only bound, noiseless  {:.3e}", d.error_events_only_bound);
    Ok(())
}
