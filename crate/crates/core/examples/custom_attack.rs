//! Define an attack by hand, save it, and analyse it.
//!
//! The forward unitary is a partial CNOT from the transit qubit into a qubit
//! ancilla; the reverse leg is untouched. The resulting attack file can be fed
//! to `lsqkd stats --attack <file>`.
//!
//! Run: cargo run --release --example custom_attack

use lsqkd::{
    decompose_attack, exact_statistics, key_rate, true_s_ae, CollectiveAttack, ComplexMatrix, ConstraintMode,
    OptimizerOptions, C64,
};

fn main() -> lsqkd::Result<()> {
    let theta: f64 = 0.3;
    let (c, s) = (theta.cos(), theta.sin());
    // Basis order |transit, ancilla⟩: 00, 01, 10, 11. The |1⟩ branch rotates the ancilla.
    let r = |x: f64| C64::new(x, 0.0);
    #[rustfmt::skip]
    let forward = ComplexMatrix::from_row_major(4, 4, vec![
        r(1.0), r(0.0), r(0.0), r(0.0),
        r(0.0), r(1.0), r(0.0), r(0.0),
        r(0.0), r(0.0), r(c),   r(-s),
        r(0.0), r(0.0), r(s),   r(c),
    ])?;
    let attack = CollectiveAttack::new(2, forward, ComplexMatrix::identity(4))?;

    let path = std::env::temp_dir().join("lsqkd_custom_attack.json");
    attack.save(&path)?;
    let attack = CollectiveAttack::load(&path)?;
    println!("saved and reloaded {}", path.display());

    let dec = decompose_attack(&attack);
    let stats = exact_statistics(&attack);
    println!("decomposition residual  {:.2e}", dec.residuals().max());
    println!("Q_Z = {:.6}  Q_X = {:.6}", stats.q_z(), stats.q_x());

    let r = key_rate(&stats, ConstraintMode::Full, &OptimizerOptions::default())?;
    println!("true S(A|E)             {:.6}", true_s_ae(&attack)?);
    println!("certified S(A|E) bound  {:.6}", r.s_ae_bound);
    println!("key rate                {:.6}", r.key_rate);
    Ok(())
}
