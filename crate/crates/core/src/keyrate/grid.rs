//! Exhaustive grid scan of the feasible region, used to cross-check the
//! multistart search.
//!
//! Works directly in the original variables: each norm takes `0, h, 2h, …`
//! of its box, `Λ₁…Λ₃` take evenly spaced values across their Cauchy-Schwarz
//! intervals, and in full mode `Λ₄` is solved from the equality and the point
//! is dropped if it leaves its own interval.

use rayon::prelude::*;

use super::constraints::ConstraintSet;
use super::{bound_from_pairs, KeyRateVariables};

/// Slack allowed on the eliminated `Λ₄` interval test.
const ELIMINATION_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct GridScan {
    /// Smallest bound value over feasible grid points (`+∞` if none).
    pub best_value: f64,
    pub best_point: Option<KeyRateVariables>,
    pub feasible_points: u64,
}

pub fn grid_scan(c: &ConstraintSet, step: f64) -> GridScan {
    assert!(step > 0.0 && step <= 1.0, "grid step must lie in (0, 1]");
    let ticks: Vec<f64> = {
        let n = (1.0 / step).round() as usize;
        (0..=n).map(|k| (k as f64 / n as f64).min(1.0)).collect()
    };
    let norm_grid: Vec<[f64; 4]> = product4(&ticks)
        .into_iter()
        .map(|t| std::array::from_fn(|i| t[i] * c.boxes[i]))
        .collect();

    let free_lambdas = if c.lambda_sum.is_some() { 3 } else { 4 };

    norm_grid
        .par_iter()
        .map(|n| {
            let mut v = KeyRateVariables {
                n01: n[0],
                n13: n[1],
                n02: n[2],
                n11: n[3],
                lambda: [0.0; 4],
            };
            let bounds = c.cauchy_schwarz_bounds(&v);
            let pairs = c.pairs(&v);
            let mut best = GridScan {
                best_value: f64::INFINITY,
                best_point: None,
                feasible_points: 0,
            };
            let combos = ticks.len().pow(free_lambdas as u32);
            for idx in 0..combos {
                let mut rest = idx;
                for i in 0..free_lambdas {
                    let t = ticks[rest % ticks.len()];
                    rest /= ticks.len();
                    v.lambda[i] = bounds[i] * (2.0 * t - 1.0);
                }
                if let Some(target) = c.lambda_sum {
                    let l4 = target - v.lambda[0] - v.lambda[1] - v.lambda[2];
                    if l4.abs() > bounds[3] + ELIMINATION_SLACK {
                        continue;
                    }
                    v.lambda[3] = l4.clamp(-bounds[3], bounds[3]);
                }
                best.feasible_points += 1;
                let value = bound_from_pairs(pairs, v.lambda);
                if value < best.best_value {
                    best.best_value = value;
                    best.best_point = Some(v.clone());
                }
            }
            best
        })
        .reduce(
            || GridScan {
                best_value: f64::INFINITY,
                best_point: None,
                feasible_points: 0,
            },
            |a, b| {
                let feasible_points = a.feasible_points + b.feasible_points;
                let (best_value, best_point) = if b.best_value < a.best_value {
                    (b.best_value, b.best_point)
                } else {
                    (a.best_value, a.best_point)
                };
                GridScan {
                    best_value,
                    best_point,
                    feasible_points,
                }
            },
        )
}

fn product4(ticks: &[f64]) -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(ticks.len().pow(4));
    for &a in ticks {
        for &b in ticks {
            for &c in ticks {
                for &d in ticks {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}
