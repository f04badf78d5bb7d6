//! Key-rate lower bound.
//!
//! The raw key's `S(A|E)` is bounded below by four entropy-gap terms, one per
//! pair of Eve's post-attack states that could be confused with each other:
//!
//! ```text
//! S(A|E) ≥ Σ_i (a_i + b_i)/2 · [ h(a_i / (a_i + b_i)) - h(λ_i) ]
//! λ_i = ½ + √((a_i - b_i)² + 4 Λ_i²) / (2 (a_i + b_i))
//! ```
//!
//! where `a_i, b_i` are squared norms of the two states and `Λ_i` the real part
//! of their overlap. None of these are observed directly; the minimum over
//! everything consistent with the channel statistics is the certified value,
//! and `r = min S(A|E) - H(A|B)`.

mod constraints;
mod grid;
mod nelder_mead;
mod search;

pub use constraints::{build_constraints, ConstraintMode, ConstraintResiduals, ConstraintSet};
pub use grid::{grid_scan, GridScan};
pub use nelder_mead::{LocalMinimum, NelderMead};
pub use search::{minimize_bound, OptimizerOptions};

use serde::Serialize;

use crate::attack::AttackDecomposition;
use crate::error::{Error, Result};
use crate::math::binary_entropy_clamped;
use crate::stats::{scenario_statistics, ChannelStatistics, ScenarioKind};

/// Constraint residual below which a point counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Tolerance on the inputs of [`s_ae_lower_bound`].
pub const BOUND_INPUT_TOL: f64 = 1e-8;

/// The eight free quantities of the bound: four squared norms and four real
/// overlaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyRateVariables {
    /// `⟨e_{0,0}^1|e_{0,0}^1⟩`
    pub n01: f64,
    /// `⟨e_{1,3}^1|e_{1,3}^1⟩`
    pub n13: f64,
    /// `⟨e_{0,2}^1|e_{0,2}^1⟩`
    pub n02: f64,
    /// `⟨e_{1,1}^1|e_{1,1}^1⟩`
    pub n11: f64,
    /// `Λ₁ … Λ₄`
    pub lambda: [f64; 4],
}

impl KeyRateVariables {
    pub fn norms(&self) -> [f64; 4] {
        [self.n01, self.n13, self.n02, self.n11]
    }

    /// The values an actual attack realizes.
    pub fn from_decomposition(d: &AttackDecomposition) -> Self {
        Self {
            n01: d.norm_reverse(0, 0, 1),
            n13: d.norm_reverse(1, 3, 1),
            n02: d.norm_reverse(0, 2, 1),
            n11: d.norm_reverse(1, 1, 1),
            lambda: d.lambdas(),
        }
    }
}

/// One entropy-gap term; zero-weight terms contribute nothing.
fn bound_term(a: f64, b: f64, overlap: f64) -> f64 {
    let (a, b) = (a.max(0.0), b.max(0.0));
    let total = a + b;
    if total <= 0.0 {
        return 0.0;
    }
    let ratio = (a / total).clamp(0.0, 1.0);
    let lambda = (0.5 + ((a - b).powi(2) + 4.0 * overlap * overlap).sqrt() / (2.0 * total)).clamp(0.0, 1.0);
    0.5 * total * (binary_entropy_clamped(ratio) - binary_entropy_clamped(lambda))
}

pub(crate) fn bound_from_pairs(pairs: [(f64, f64); 4], lambda: [f64; 4]) -> f64 {
    pairs
        .iter()
        .zip(lambda)
        .map(|(&(a, b), l)| bound_term(a, b, l))
        .sum()
}

/// The `S(A|E)` lower bound at a point of the variable space.
pub fn s_ae_lower_bound(v: &KeyRateVariables, s: &ChannelStatistics) -> Result<f64> {
    let c = build_constraints(s, ConstraintMode::ErrorEventsOnly)?;
    let r = c.residuals(v);
    if r.box_violation > BOUND_INPUT_TOL || r.cauchy_schwarz_violation > BOUND_INPUT_TOL {
        return Err(Error::Config(format!(
            "variables violate constraints (box {:e}, Cauchy-Schwarz {:e})",
            r.box_violation, r.cauchy_schwarz_violation
        )));
    }
    Ok(bound_from_pairs(c.pairs(v), v.lambda))
}

/// `H(A|B)` of the raw key, with A's bit uniform.
pub fn h_a_given_b(s: &ChannelStatistics) -> f64 {
    let plogp = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    let joint = [
        0.5 * s.pf(0, 0),
        0.5 * s.pf(0, 1),
        0.5 * s.pf(1, 0),
        0.5 * s.pf(1, 1),
    ];
    let h_ab: f64 = joint.iter().map(|&p| plogp(p)).sum();
    let h_b = plogp(joint[0] + joint[2]) + plogp(joint[1] + joint[3]);
    h_ab - h_b
}

/// Outcome of a key-rate evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct KeyRateResult {
    pub mode: ConstraintMode,
    /// Minimized lower bound on `S(A|E)`.
    pub s_ae_bound: f64,
    pub h_a_b: f64,
    pub key_rate: f64,
    pub minimizer: KeyRateVariables,
    pub restarts: usize,
    /// Restarts whose local minimum lies within the agreement tolerance of the best.
    pub restarts_agreeing: usize,
    pub feasible: bool,
    pub residuals: ConstraintResiduals,
}

impl KeyRateResult {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn agreement(&self) -> f64 {
        self.restarts_agreeing as f64 / self.restarts as f64
    }
}

pub fn key_rate(s: &ChannelStatistics, mode: ConstraintMode, opts: &OptimizerOptions) -> Result<KeyRateResult> {
    minimize_bound(s, mode, opts)
}

#[derive(Clone, Debug)]
pub struct ThresholdOptions {
    pub q_lo: f64,
    pub q_hi: f64,
    /// Absolute tolerance on the returned `Q`.
    pub q_tol: f64,
    /// Minimum fraction of agreeing restarts at every probe.
    pub quorum: f64,
    pub optimizer: OptimizerOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            q_lo: 0.0,
            q_hi: 0.25,
            q_tol: 1e-4,
            quorum: 0.5,
            optimizer: OptimizerOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdProbe {
    pub q: f64,
    pub key_rate: f64,
    pub restarts_agreeing: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub scenario: String,
    pub threshold: f64,
    /// Final bracket `[lo, hi]` with `r(lo) > 0 ≥ r(hi)`.
    pub bracket: (f64, f64),
    pub probes: Vec<ThresholdProbe>,
}

/// Largest noise level `Q` of the scenario family that still yields a positive key rate.
pub fn find_threshold(kind: ScenarioKind, opts: &ThresholdOptions) -> Result<ThresholdReport> {
    if !(opts.q_lo < opts.q_hi) || opts.q_tol <= 0.0 {
        return Err(Error::Config(format!(
            "invalid bracket [{}, {}] with tolerance {}",
            opts.q_lo, opts.q_hi, opts.q_tol
        )));
    }
    let mut probes = Vec::new();
    let mut probe = |q: f64| -> Result<f64> {
        let r = key_rate(&scenario_statistics(q, kind)?, ConstraintMode::Full, &opts.optimizer)?;
        if r.agreement() < opts.quorum {
            return Err(Error::NonConvergence {
                q,
                agreeing: r.restarts_agreeing,
                restarts: r.restarts,
            });
        }
        probes.push(ThresholdProbe {
            q,
            key_rate: r.key_rate,
            restarts_agreeing: r.restarts_agreeing,
        });
        Ok(r.key_rate)
    };

    let (mut lo, mut hi) = (opts.q_lo, opts.q_hi);
    let (r_lo, r_hi) = (probe(lo)?, probe(hi)?);
    if !(r_lo > 0.0 && r_hi <= 0.0) {
        return Err(Error::NoSignChange { lo, hi, r_lo, r_hi });
    }
    while hi - lo > opts.q_tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdReport {
        scenario: kind.to_string(),
        threshold: 0.5 * (lo + hi),
        bracket: (lo, hi),
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{decompose_attack, paper_attack, random_attack, true_s_ae};
    use crate::stats::exact_statistics;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn noiseless() -> ChannelStatistics {
        scenario_statistics(0.0, ScenarioKind::IndependentDepolarizing).unwrap()
    }

    fn quick() -> OptimizerOptions {
        OptimizerOptions {
            restarts: 24,
            ..Default::default()
        }
    }

    fn h(x: f64) -> f64 {
        crate::math::binary_entropy(x).unwrap()
    }

    #[test]
    fn bound_at_noiseless_point() {
        let v = KeyRateVariables {
            n01: 0.0,
            n13: 1.0,
            n02: 0.0,
            n11: 0.0,
            lambda: [1.0, 0.0, 0.0, 0.0],
        };
        assert_abs_diff_eq!(s_ae_lower_bound(&v, &noiseless()).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_at_paper_attack_point() {
        let v = KeyRateVariables {
            n01: 0.5,
            n13: 0.5,
            n02: 0.0,
            n11: 0.0,
            lambda: [0.0; 4],
        };
        assert_abs_diff_eq!(s_ae_lower_bound(&v, &noiseless()).unwrap(), 0.0, epsilon = 1e-12);
        let own = KeyRateVariables::from_decomposition(&decompose_attack(&paper_attack()));
        assert_abs_diff_eq!(own.n01, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s_ae_lower_bound(&own, &exact_statistics(&paper_attack())).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bound_with_empty_weights() {
        assert_eq!(bound_from_pairs([(0.0, 0.0); 4], [0.0; 4]), 0.0);
        let mut s = noiseless();
        s.pf[0] = [0.0, 1.0];
        s.pf[1] = [1.0, 0.0];
        let v = KeyRateVariables { n01: 0.0, n13: 0.0, n02: 0.0, n11: 0.0, lambda: [0.0; 4] };
        // only terms 3 and 4 carry weight here; a = 0, b = 1 gives h(0) - h(1) = 0
        assert_abs_diff_eq!(s_ae_lower_bound(&v, &s).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bound_rejects_out_of_box_input() {
        let v = KeyRateVariables { n01: 1.5, n13: 0.0, n02: 0.0, n11: 0.0, lambda: [0.0; 4] };
        assert!(s_ae_lower_bound(&v, &noiseless()).is_err());
        let v = KeyRateVariables { n01: 0.5, n13: 0.5, n02: 0.0, n11: 0.0, lambda: [0.9, 0.0, 0.0, 0.0] };
        assert!(s_ae_lower_bound(&v, &noiseless()).is_err());
    }

    #[test]
    fn h_a_given_b_values() {
        assert_abs_diff_eq!(h_a_given_b(&noiseless()), 0.0, epsilon = 1e-15);
        let s = scenario_statistics(0.11, ScenarioKind::Dependent).unwrap();
        assert_abs_diff_eq!(h_a_given_b(&s), 0.499915958164528, epsilon = 1e-12);
        let mut s = noiseless();
        s.pf[0] = [0.5, 0.5];
        s.pf[1] = [0.5, 0.5];
        assert_abs_diff_eq!(h_a_given_b(&s), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn noiseless_key_rate_is_one() {
        let r = key_rate(&noiseless(), ConstraintMode::Full, &quick()).unwrap();
        assert_abs_diff_eq!(r.s_ae_bound, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.key_rate, 1.0, epsilon = 1e-4);
        assert!(r.feasible);
    }

    #[test]
    fn paper_attack_is_caught() {
        let r = minimize_bound(&exact_statistics(&paper_attack()), ConstraintMode::Full, &quick()).unwrap();
        assert!(r.s_ae_bound <= 1e-3, "{}", r.s_ae_bound);
        let r = minimize_bound(&noiseless(), ConstraintMode::ErrorEventsOnly, &quick()).unwrap();
        assert!(r.s_ae_bound <= 1e-3);
    }

    #[test]
    fn scenario_minimum_matches_symmetric_attack() {
        // At symmetric statistics the point a_i = b_i, Λ_i ∝ weight is
        // feasible and worth 1 - h(Q_X); the search must reach it.
        for (q, kind) in [
            (0.03, ScenarioKind::IndependentDepolarizing),
            (0.079, ScenarioKind::IndependentDepolarizing),
            (0.11, ScenarioKind::Dependent),
        ] {
            let s = scenario_statistics(q, kind).unwrap();
            let opts = OptimizerOptions {
                agreement_tol: 1e-3,
                ..quick()
            };
            let r = minimize_bound(&s, ConstraintMode::Full, &opts).unwrap();
            let witness = 1.0 - h(kind.q_x(q));
            assert!(r.s_ae_bound <= witness + 1e-6, "q={q}: {} vs {witness}", r.s_ae_bound);
            assert!(r.s_ae_bound >= witness - 1e-3, "q={q}: {} vs {witness}", r.s_ae_bound);
            assert!(r.feasible);
            assert!(r.agreement() >= 0.9, "agreement {}", r.agreement());
        }
    }

    #[test]
    fn mode_monotonicity() {
        let s = scenario_statistics(0.05, ScenarioKind::Dependent).unwrap();
        let full = minimize_bound(&s, ConstraintMode::Full, &quick()).unwrap();
        let loose = minimize_bound(&s, ConstraintMode::ErrorEventsOnly, &quick()).unwrap();
        assert!(loose.s_ae_bound <= full.s_ae_bound + 1e-6);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = scenario_statistics(0.05, ScenarioKind::IndependentDepolarizing).unwrap();
        let a = key_rate(&s, ConstraintMode::Full, &quick()).unwrap();
        let b = key_rate(&s, ConstraintMode::Full, &quick()).unwrap();
        assert_eq!(a.s_ae_bound.to_bits(), b.s_ae_bound.to_bits());
        assert_eq!(a.restarts_agreeing, b.restarts_agreeing);
    }

    #[test]
    fn own_decomposition_is_feasible_and_sound() {
        for seed in 0..30 {
            let a = random_attack(1 + seed as usize % 4, seed).unwrap();
            let s = exact_statistics(&a);
            let v = KeyRateVariables::from_decomposition(&decompose_attack(&a));
            let c = build_constraints(&s, ConstraintMode::Full).unwrap();
            assert!(c.residuals(&v).max() <= 1e-8, "seed {seed}: {:?}", c.residuals(&v));
            let bound = s_ae_lower_bound(&v, &s).unwrap();
            assert!(bound <= true_s_ae(&a).unwrap() + 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn grid_never_beats_search_noticeably() {
        let s = scenario_statistics(0.05, ScenarioKind::IndependentDepolarizing).unwrap();
        let c = build_constraints(&s, ConstraintMode::Full).unwrap();
        let scan = grid_scan(&c, 0.25);
        let r = minimize_bound(&s, ConstraintMode::Full, &quick()).unwrap();
        assert!(scan.feasible_points > 0);
        assert!(scan.best_value >= r.s_ae_bound - 1e-3);
    }

    #[test]
    fn threshold_bracket_without_sign_change() {
        let opts = ThresholdOptions {
            q_hi: 0.01,
            optimizer: quick(),
            ..Default::default()
        };
        assert!(matches!(
            find_threshold(ScenarioKind::IndependentDepolarizing, &opts),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn key_rate_result_json() {
        let r = key_rate(&noiseless(), ConstraintMode::Full, &quick()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json_string().unwrap()).unwrap();
        for field in ["s_ae_bound", "h_a_b", "key_rate", "minimizer", "restarts_agreeing", "feasible", "residuals"] {
            assert!(v.get(field).is_some(), "{field}");
        }
        assert_eq!(v["mode"], "full");
    }

    proptest! {
        #[test]
        fn bound_symmetric_under_pair_swap(a in 0.0f64..1.0, b in 0.0f64..1.0, t in -1.0f64..1.0) {
            let l = t * (a * b).sqrt();
            let x = bound_term(a, b, l);
            let y = bound_term(b, a, l);
            prop_assert!((x - y).abs() <= 1e-12);
            prop_assert!(x >= -1e-12);
        }
    }
}
