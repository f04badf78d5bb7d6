//! Compare the multistart minimum with an exhaustive coarse grid.
//!
//! Run: cargo run --release --example grid_cross_check

use lsqkd::{
    build_constraints, grid_scan, minimize_bound, scenario_statistics, ConstraintMode, OptimizerOptions,
    ScenarioKind,
};

fn main() -> lsqkd::Result<()> {
    for q in [0.0, 0.05, 0.079, 0.11] {
        let s = scenario_statistics(q, ScenarioKind::IndependentDepolarizing)?;
        let c = build_constraints(&s, ConstraintMode::Full)?;
        let search = minimize_bound(&s, ConstraintMode::Full, &OptimizerOptions::default())?;
        let grid = grid_scan(&c, 0.1);
        println!(
            "Q = {q:<6} search {:.6}  grid {:.6}  ({} feasible grid points)",
            search.s_ae_bound, grid.best_value, grid.feasible_points
        );
    }
    Ok(())
}
