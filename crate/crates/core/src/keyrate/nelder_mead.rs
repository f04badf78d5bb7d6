//! Box-constrained Nelder-Mead simplex search.
//!
//! Trial points are clamped into the box before evaluation, so every vertex of
//! the simplex stays feasible. Coefficients follow the dimension-adaptive
//! choice of Gao and Han, which behaves better than the classic (1, 2, ½, ½)
//! in eight or more dimensions.

#[derive(Clone, Debug)]
pub struct NelderMead {
    /// Edge length of the initial simplex, in the box's own units.
    pub initial_step: f64,
    /// Stop once `max f - min f` over the simplex drops below this.
    pub f_tol: f64,
    /// ...and every vertex is within this distance of the best one.
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_evals: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], lower: &[f64], upper: &[f64]) -> LocalMinimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        assert!(n > 0 && lower.len() == n && upper.len() == n);
        let nf = n as f64;
        let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            f(x)
        };

        let mut start = x0.to_vec();
        clamp_into(&mut start, lower, upper);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let fx = eval(&start, &mut evals);
        simplex.push((start.clone(), fx));
        for i in 0..n {
            let mut v = start.clone();
            let step = self.initial_step * (upper[i] - lower[i]).max(f64::MIN_POSITIVE);
            v[i] = if v[i] + step <= upper[i] { v[i] + step } else { v[i] - step };
            clamp_into(&mut v, lower, upper);
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }

        let mut converged = false;
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[n].1);
            let spread = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if (worst - best).abs() <= self.f_tol && spread <= self.x_tol {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / nf)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                clamp_into(&mut p, lower, upper);
                p
            };

            let xr = along(alpha);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(alpha * beta);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(alpha * gamma);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-gamma);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let anchor = simplex[0].0.clone();
            for (v, fv) in simplex.iter_mut().skip(1) {
                for (x, a) in v.iter_mut().zip(&anchor) {
                    *x = a + delta * (*x - a);
                }
                *fv = eval(v, &mut evals);
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        LocalMinimum {
            x,
            value,
            evals,
            converged,
        }
    }
}
