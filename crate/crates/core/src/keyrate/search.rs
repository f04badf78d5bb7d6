//! Multistart minimization of the `S(A|E)` bound over the feasible region.
//!
//! The search runs in the unit cube `[0,1]^8`. The first four coordinates
//! scale the norm boxes. The last four pick the `Λ`s: in error-events-only
//! mode each is placed directly in its Cauchy-Schwarz interval; in full mode
//! they are weights for a logistic fill that distributes the required `Σ Λ`
//! over the four intervals, so every decoded point meets the equality
//! exactly. When the norms leave the intervals too narrow to reach the target
//! sum, the shortfall is charged as a quadratic penalty (this only happens at
//! degenerate statistics such as a noiseless channel, where the feasible set
//! has no interior).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::constraints::{build_constraints, ConstraintMode, ConstraintSet};
use super::nelder_mead::NelderMead;
use super::{bound_from_pairs, h_a_given_b, KeyRateResult, KeyRateVariables, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::stats::ChannelStatistics;

const DIM: usize = 8;
const PENALTY: f64 = 1e8;
const KICK: f64 = 0.25;
const LOGIT_EPS: f64 = 1e-12;
const MU_RANGE: f64 = 80.0;

#[derive(Clone, Debug)]
pub struct OptimizerOptions {
    /// Number of random starting points.
    pub restarts: usize,
    /// Master seed; restart `k` draws from ChaCha stream `k`.
    pub seed: u64,
    /// A re-polish of a local minimum must improve by more than this to continue.
    pub objective_tol: f64,
    /// Restarts within this of the best value count as agreeing.
    pub agreement_tol: f64,
    /// Evaluation budget of a single simplex run.
    pub max_evals: usize,
    /// Perturb-and-descend rounds after each restart's first descent.
    pub kicks: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 200,
            seed: 0x5eed,
            objective_tol: 1e-6,
            agreement_tol: 1e-4,
            max_evals: 20_000,
            kicks: 0,
        }
    }
}

/// Maps a point of the search cube to key-rate variables and reports how far
/// the decoded `Λ`s fall short of the equality constraint.
pub(crate) fn decode(c: &ConstraintSet, u: &[f64]) -> (KeyRateVariables, f64) {
    let mut v = KeyRateVariables {
        n01: u[0] * c.boxes[0],
        n13: u[1] * c.boxes[1],
        n02: u[2] * c.boxes[2],
        n11: u[3] * c.boxes[3],
        lambda: [0.0; 4],
    };
    let bounds = c.cauchy_schwarz_bounds(&v);
    let weights = [u[4], u[5], u[6], u[7]];
    let Some(target) = c.lambda_sum else {
        for i in 0..4 {
            v.lambda[i] = bounds[i] * (2.0 * weights[i] - 1.0);
        }
        return (v, 0.0);
    };

    let reach: f64 = bounds.iter().sum();
    if target >= reach {
        v.lambda = bounds;
        return (v, target - reach);
    }
    if target <= -reach {
        v.lambda = bounds.map(|b| -b);
        return (v, -reach - target);
    }
    // Λ_i = B_i (2 y_i - 1) with Σ B_i y_i = (target + reach) / 2
    let fill = 0.5 * (target + reach);
    let y = logistic_fill(&bounds, &weights, fill);
    for i in 0..4 {
        v.lambda[i] = bounds[i] * (2.0 * y[i] - 1.0);
    }
    (v, 0.0)
}

/// Finds `y_i = σ(logit w_i + μ)` with `Σ B_i y_i = fill`, for `0 ≤ fill ≤ Σ B_i`.
///
/// Unlike clipping, the logistic map never saturates exactly, so every weight
/// keeps moving its `y_i` and the simplex cannot stall on a flat face.
fn logistic_fill(bounds: &[f64; 4], weights: &[f64; 4], fill: f64) -> [f64; 4] {
    let reach: f64 = bounds.iter().sum();
    if fill <= 0.0 {
        return [0.0; 4];
    }
    if fill >= reach {
        return [1.0; 4];
    }
    let logits = weights.map(|w| {
        let w = w.clamp(LOGIT_EPS, 1.0 - LOGIT_EPS);
        (w / (1.0 - w)).ln()
    });
    let ys = |mu: f64| logits.map(|s| 1.0 / (1.0 + (-(s + mu)).exp()));
    let excess = |mu: f64| -> (f64, f64) {
        let y = ys(mu);
        let value = (0..4).map(|i| bounds[i] * y[i]).sum::<f64>() - fill;
        let slope = (0..4).map(|i| bounds[i] * y[i] * (1.0 - y[i])).sum::<f64>();
        (value, slope)
    };
    // safeguarded Newton on a monotone function
    let (mut lo, mut hi) = (-MU_RANGE, MU_RANGE);
    let mut mu = 0.0;
    for _ in 0..200 {
        let (value, slope) = excess(mu);
        if value.abs() <= 1e-15 * reach.max(1.0) {
            break;
        }
        if value > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let newton = mu - value / slope;
        mu = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-14 {
            break;
        }
    }
    ys(mu)
}

fn objective(c: &ConstraintSet, u: &[f64]) -> f64 {
    let (v, shortfall) = decode(c, u);
    bound_from_pairs(c.pairs(&v), v.lambda) + PENALTY * shortfall * shortfall
}

struct Restart {
    u: Vec<f64>,
    value: f64,
}

fn local_search(c: &ConstraintSet, opts: &OptimizerOptions, start: Vec<f64>, rng: &mut ChaCha8Rng) -> Restart {
    let lower = [0.0; DIM];
    let upper = [1.0; DIM];
    let nm = NelderMead {
        max_evals: opts.max_evals,
        ..Default::default()
    };
    let f = |u: &[f64]| objective(c, u);
    let polish = NelderMead {
        initial_step: 0.02,
        ..nm.clone()
    };
    let descend = |x0: &[f64], first: &NelderMead| {
        let mut best = first.minimize(f, x0, &lower, &upper);
        // restarting the simplex around its own optimum escapes collapsed simplices
        for _ in 0..8 {
            let again = polish.minimize(f, &best.x, &lower, &upper);
            let improved = again.value < best.value - opts.objective_tol;
            if again.value < best.value {
                best = again;
            }
            if !improved {
                break;
            }
        }
        best
    };

    let mut best = descend(&start, &nm);
    // the feasible region has faces that trap the simplex; random kicks get it off them
    for _ in 0..opts.kicks {
        let kicked: Vec<f64> = best
            .x
            .iter()
            .map(|x| (x + KICK * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
            .collect();
        let trial = descend(&kicked, &nm);
        if trial.value < best.value {
            best = trial;
        }
    }
    Restart {
        u: best.x,
        value: best.value,
    }
}

/// Minimizes the `S(A|E)` lower bound subject to the constraints implied by `s`.
pub fn minimize_bound(
    s: &ChannelStatistics,
    mode: ConstraintMode,
    opts: &OptimizerOptions,
) -> Result<KeyRateResult> {
    let c = build_constraints(s, mode)?;
    minimize_constraints(&c, s, opts)
}

pub(crate) fn minimize_constraints(
    c: &ConstraintSet,
    s: &ChannelStatistics,
    opts: &OptimizerOptions,
) -> Result<KeyRateResult> {
    if opts.restarts == 0 {
        return Err(Error::Config("at least one restart is required".into()));
    }
    let runs: Vec<Restart> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let start: Vec<f64> = (0..DIM).map(|_| rng.random::<f64>()).collect();
            local_search(c, opts, start, &mut rng)
        })
        .collect();

    // first minimum in restart order, so ties resolve the same way every run
    let best = runs
        .iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");
    let agreeing = runs
        .iter()
        .filter(|r| (r.value - best.value).abs() <= opts.agreement_tol)
        .count();

    let (minimizer, shortfall) = decode(c, &best.u);
    if shortfall > FEASIBILITY_TOL {
        return Err(Error::Infeasible { residual: shortfall });
    }
    let residuals = c.residuals(&minimizer);
    let s_ae_bound = bound_from_pairs(c.pairs(&minimizer), minimizer.lambda);
    let h_a_b = h_a_given_b(s);
    Ok(KeyRateResult {
        mode: c.mode,
        s_ae_bound,
        h_a_b,
        key_rate: s_ae_bound - h_a_b,
        minimizer,
        restarts: opts.restarts,
        restarts_agreeing: agreeing,
        feasible: residuals.max() <= FEASIBILITY_TOL,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cs(target: Option<f64>) -> ConstraintSet {
        ConstraintSet {
            mode: if target.is_some() { ConstraintMode::Full } else { ConstraintMode::ErrorEventsOnly },
            boxes: [0.9, 0.9, 0.1, 0.1],
            lambda_sum: target,
        }
    }

    #[test]
    fn fill_hits_target() {
        let b = [0.4, 0.3, 0.05, 0.05];
        for fill in [0.0, 1e-9, 0.1, 0.4, 0.79, 0.8] {
            let y = logistic_fill(&b, &[0.9, 0.1, 0.5, 0.0], fill);
            let got: f64 = y.iter().zip(&b).map(|(y, b)| y * b).sum();
            assert!((got - fill).abs() < 1e-12, "fill {fill}: {y:?}");
            assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn fill_reaches_any_interior_point() {
        // weights equal to a feasible y reproduce it
        let b = [0.4, 0.3, 0.05, 0.05];
        let y = [0.2, 0.7, 0.4, 0.9];
        let fill: f64 = y.iter().zip(&b).map(|(y, b)| y * b).sum();
        let got = logistic_fill(&b, &y, fill);
        for (a, e) in got.iter().zip(&y) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn decoded_points_are_feasible(u in proptest::collection::vec(0.0f64..=1.0, 8), t in -0.5f64..0.8) {
            let c = cs(Some(t));
            let (v, shortfall) = decode(&c, &u);
            let r = c.residuals(&v);
            prop_assert!(r.box_violation <= 1e-15);
            prop_assert!(r.cauchy_schwarz_violation <= 1e-12);
            if shortfall == 0.0 {
                prop_assert!(r.equality_residual.unwrap() <= 1e-12);
            }
            let c = cs(None);
            let (v, shortfall) = decode(&c, &u);
            prop_assert_eq!(shortfall, 0.0);
            prop_assert!(c.residuals(&v).max() <= 1e-12);
        }
    }
}
