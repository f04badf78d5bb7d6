use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::KeyRateVariables;
use crate::error::{Error, Result};
use crate::stats::{eta_from_statistics, validate_statistics, ChannelStatistics, SENT_ONE, SENT_ZERO};

/// Which observations the analysis is allowed to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    /// Error events plus mismatched-measurement statistics.
    Full,
    /// Only B's Z-basis statistics; the `Q_X` equality is dropped.
    ErrorEventsOnly,
}

impl FromStr for ConstraintMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "error-events-only" | "error-events" => Ok(Self::ErrorEventsOnly),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected full or error-events-only)"
            ))),
        }
    }
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::ErrorEventsOnly => "error-events-only",
        })
    }
}

/// Feasible region for [`KeyRateVariables`].
///
/// Boxes: `n01 ∈ [0, pf(0→0)]`, `n13 ∈ [0, pf(1→1)]`, `n02 ∈ [0, pf(1→0)]`,
/// `n11 ∈ [0, pf(0→1)]`. Cauchy-Schwarz: `|Λ_i| ≤ √(a_i b_i)`. In full mode
/// also `Σ Λ_i = 2(1 - Q_X) - (pr(0→+) + pr(1→+)) - η₁ - η₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub mode: ConstraintMode,
    /// Upper bounds of the four norm boxes, in variable order `n01, n13, n02, n11`.
    pub boxes: [f64; 4],
    /// Required value of `Λ₁ + Λ₂ + Λ₃ + Λ₄` (full mode only).
    pub lambda_sum: Option<f64>,
}

/// Worst violations of each constraint family at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintResiduals {
    pub box_violation: f64,
    pub cauchy_schwarz_violation: f64,
    /// `|Σ Λ - target|`; absent in error-events-only mode.
    pub equality_residual: Option<f64>,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        self.box_violation
            .max(self.cauchy_schwarz_violation)
            .max(self.equality_residual.unwrap_or(0.0))
    }
}

impl ConstraintSet {
    /// Number of constraints: four boxes, four Cauchy-Schwarz, and the equality in full mode.
    pub fn len(&self) -> usize {
        8 + usize::from(self.lambda_sum.is_some())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The four `(a_i, b_i)` norm pairs of the bound's terms.
    pub fn pairs(&self, v: &KeyRateVariables) -> [(f64, f64); 4] {
        let [pf00, pf11, pf10, pf01] = self.boxes;
        [
            (pf00 - v.n01, v.n13),
            (v.n01, pf11 - v.n13),
            (v.n11, pf10 - v.n02),
            (pf01 - v.n11, v.n02),
        ]
    }

    /// `√(a_i b_i)` with negative norms read as zero.
    pub fn cauchy_schwarz_bounds(&self, v: &KeyRateVariables) -> [f64; 4] {
        self.pairs(v).map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
    }

    pub fn residuals(&self, v: &KeyRateVariables) -> ConstraintResiduals {
        let norms = v.norms();
        let box_violation = norms
            .iter()
            .zip(&self.boxes)
            .map(|(n, hi)| (-n).max(n - hi).max(0.0))
            .fold(0.0, f64::max);
        let cauchy_schwarz_violation = v
            .lambda
            .iter()
            .zip(self.cauchy_schwarz_bounds(v))
            .map(|(l, b)| (l.abs() - b).max(0.0))
            .fold(0.0, f64::max);
        let equality_residual = self
            .lambda_sum
            .map(|t| (v.lambda.iter().sum::<f64>() - t).abs());
        ConstraintResiduals {
            box_violation,
            cauchy_schwarz_violation,
            equality_residual,
        }
    }

    pub fn is_satisfied(&self, v: &KeyRateVariables, tol: f64) -> bool {
        self.residuals(v).max() <= tol
    }
}

/// Builds the constraint set implied by the observed statistics.
pub fn build_constraints(s: &ChannelStatistics, mode: ConstraintMode) -> Result<ConstraintSet> {
    let (s, _) = validate_statistics(s)?;
    let boxes = [
        s.pf(SENT_ZERO, 0),
        s.pf(SENT_ONE, 1),
        s.pf(SENT_ONE, 0),
        s.pf(SENT_ZERO, 1),
    ];
    let lambda_sum = match mode {
        ConstraintMode::ErrorEventsOnly => None,
        ConstraintMode::Full => {
            let (eta1, eta2) = eta_from_statistics(&s)?;
            let t = 2.0 * (1.0 - s.q_x()) - (s.pr_plus(SENT_ZERO) + s.pr_plus(SENT_ONE)) - eta1 - eta2;
            // Σ|Λ_i| ≤ Σ (a_i + b_i)/2 = half the total box mass
            let reach = 0.5 * boxes.iter().sum::<f64>();
            if t.abs() > reach + super::FEASIBILITY_TOL {
                return Err(Error::Infeasible {
                    residual: t.abs() - reach,
                });
            }
            Some(t)
        }
    };
    Ok(ConstraintSet {
        mode,
        boxes,
        lambda_sum,
    })
}
