//! Entropy primitives on small states.
//!
//! Run: cargo run --release --example entropy_basics

use lsqkd::math::{basis, kron_vec, scale, add};
use lsqkd::{
    binary_entropy, conditional_entropy, partial_trace, shannon_entropy, von_neumann_entropy, DensityOperator,
    ProbabilityDistribution,
};

fn main() -> lsqkd::Result<()> {
    println!("h(0.11)               = {:.9}", binary_entropy(0.11)?);

    let joint = ProbabilityDistribution::new(vec![0.4605, 0.0395, 0.0395, 0.4605])?;
    println!("H(joint)              = {:.9}", shannon_entropy(&joint));

    // (|00⟩ + |11⟩)/√2
    let bell = scale(&add(&kron_vec(&basis(0, 2), &basis(0, 2)), &kron_vec(&basis(1, 2), &basis(1, 2))), 0.5f64.sqrt());
    let rho = DensityOperator::pure(&bell)?;
    let reduced = partial_trace(&rho, &[2, 2], &[0])?;
    println!("S(Bell)               = {:.9}", von_neumann_entropy(&rho)?);
    println!("S(A) of Bell          = {:.9}", von_neumann_entropy(&reduced)?);
    println!("S(A|B) of Bell        = {:.9}", conditional_entropy(&rho, (2, 2))?);

    let noisy = DensityOperator::mixture(&[(0.8, &rho), (0.2, &DensityOperator::maximally_mixed(4))])?;
    println!("S(A|B) of 0.8 Bell    = {:.9}", conditional_entropy(&noisy, (2, 2))?);
    Ok(())
}
