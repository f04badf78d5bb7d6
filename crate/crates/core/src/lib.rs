//! Limited-resource semi-quantum key distribution.
//!
//! A fully quantum party A talks to a classical party B who can only
//! measure-and-resend in the computational basis or reflect. This crate
//! simulates the protocol against arbitrary two-way collective attacks,
//! computes the exact quantities those attacks produce, and evaluates a
//! certified lower bound on the asymptotic key rate from channel statistics
//! alone.
//!
//! ```
//! use lsqkd::{key_rate, scenario_statistics, ConstraintMode, OptimizerOptions, ScenarioKind};
//!
//! let s = scenario_statistics(0.02, ScenarioKind::IndependentDepolarizing)?;
//! let opts = OptimizerOptions { restarts: 16, ..Default::default() };
//! let r = key_rate(&s, ConstraintMode::Full, &opts)?;
//! assert!(r.key_rate > 0.0);
//! # Ok::<(), lsqkd::Error>(())
//! ```

pub mod attack;
pub mod cli;
pub mod error;
pub mod keyrate;
pub mod math;
pub mod stats;

pub use attack::{
    build_rho_abe, decompose_attack, depolarizing_attack, paper_attack, random_attack, true_s_ae,
    AttackDecomposition, CollectiveAttack,
};
pub use error::{Error, Result};
pub use keyrate::{
    build_constraints, find_threshold, grid_scan, h_a_given_b, key_rate, minimize_bound, s_ae_lower_bound,
    ConstraintMode, ConstraintSet, KeyRateResult, KeyRateVariables, OptimizerOptions, ThresholdOptions,
    ThresholdReport,
};
pub use math::{
    binary_entropy, conditional_entropy, partial_trace, random_unitary, shannon_entropy, tensor_product,
    von_neumann_entropy, ComplexMatrix, DensityOperator, ProbabilityDistribution, C64,
};
pub use stats::{
    exact_statistics, scenario_statistics, simulate_protocol, validate_statistics, ChannelStatistics,
    ProtocolConfig, ScenarioKind, SimulationOutcome,
};
