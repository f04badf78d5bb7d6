//! Dense complex linear algebra and entropy primitives.
//!
//! Everything here works on small dense matrices (the largest object in the
//! crate is a 64x64 density operator), so the heavy lifting is delegated to
//! `nalgebra` and this module only adds the quantum-information vocabulary on
//! top: density operators, partial traces, and the Shannon / von Neumann
//! entropies (all logarithms base 2, with `0 log 0 = 0`).

use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for structural checks: unitarity, hermiticity, traces, sums.
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Tolerance for spectral comparisons (entropies of similar operators).
pub const SPECTRAL_TOL: f64 = 1e-8;
/// Slack accepted around `[0, 1]` before `binary_entropy` reports a domain error.
pub const PROBABILITY_SLACK: f64 = 1e-12;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// A dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::Dimension(format!(
                "column of length {} in a matrix with {rows} rows",
                bad.len()
            )));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn from_inner(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols(), "vector length must match column count");
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U^dag U - I|` over entries; infinite for non-square input.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = self.adjoint() * self;
        gram.max_abs_diff(&Self::identity(self.rows()))
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let max_deviation = self.unitarity_deviation();
        if max_deviation <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { max_deviation })
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 * &rhs.0)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Kronecker product of two state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Computational basis vector `|index⟩` of the given dimension.
pub fn basis(index: usize, dim: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(v: &[C64], factor: f64) -> Vec<C64> {
    v.iter().map(|z| z * factor).collect()
}

/// `|v⟩⟨v|` (not normalized).
pub fn outer(v: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
}

/// A Hermitian, positive semi-definite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates hermiticity, trace and positivity within [`STRUCTURAL_TOL`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::Dimension(format!(
                "density operator must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let max_deviation = matrix.hermiticity_deviation();
        if max_deviation > STRUCTURAL_TOL {
            return Err(Error::NotHermitian { max_deviation });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCTURAL_TOL || tr.im.abs() > STRUCTURAL_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}")));
        }
        let rho = Self { matrix };
        let min_eig = rho
            .raw_eigenvalues()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -STRUCTURAL_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(state: &[C64]) -> Result<Self> {
        let n = norm_sqr(state);
        if (n - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::InvalidDensity(format!("state has norm² {n}")));
        }
        Self::new(outer(state))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// Convex mixture `Σ w_i ρ_i`.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, r)| r.dim())
            .ok_or_else(|| Error::Dimension("empty mixture".into()))?;
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (w, r) in parts {
            if r.dim() != dim {
                return Err(Error::Dimension("mixture of different dimensions".into()));
            }
            acc += r.matrix.inner().map(|z| z * *w);
        }
        Self::new(ComplexMatrix(acc))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `U ρ U^dag`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.cols() != self.dim() || !u.is_square() {
            return Err(Error::Dimension("unitary does not match operator".into()));
        }
        Self::new(&(u * &self.matrix) * &u.adjoint())
    }

    fn raw_eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = nalgebra::SymmetricEigen::try_new(
            self.matrix.inner().clone(),
            EIGEN_EPS,
            EIGEN_MAX_ITER,
        )
        .ok_or(Error::Eigensolver)?;
        Ok(eig.eigenvalues.iter().copied().collect())
    }

    /// Spectrum with tolerance-level negatives clamped to zero and renormalized.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut ev: Vec<f64> = self
            .raw_eigenvalues()?
            .into_iter()
            .map(|x| x.max(0.0))
            .collect();
        let total: f64 = ev.iter().sum();
        if total > 0.0 {
            ev.iter_mut().for_each(|x| *x /= total);
        }
        Ok(ev)
    }
}

/// Non-negative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityDistribution {
    weights: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !w.is_finite() || **w < 0.0 || **w > 1.0)
        {
            return Err(Error::InvalidDistribution(format!("weight {w} not in [0,1]")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// `h(x) = -x log x - (1-x) log(1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(binary_entropy_clamped(x))
}

/// Binary entropy with the argument clamped into `[0, 1]`; for hot loops.
pub(crate) fn binary_entropy_clamped(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    plogp(x) + plogp(1.0 - x)
}

pub fn shannon_entropy(d: &ProbabilityDistribution) -> f64 {
    d.weights.iter().map(|&p| plogp(p)).sum()
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(rho.eigenvalues()?.into_iter().map(plogp).sum())
}

/// Reduced operator on the factors listed in `keep`.
///
/// `dims` gives the factor dimensions in tensor order; `keep` may list the
/// kept factors in any order but the result keeps them in tensor order.
pub fn partial_trace(rho: &DensityOperator, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::Dimension(format!(
            "factor dimensions {dims:?} multiply to {total}, operator has dimension {}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(Error::Dimension("partial trace must keep at least one factor".into()));
    }
    if let Some(k) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::Dimension(format!("factor {k} out of range")));
    }
    let mut kept_mask = vec![false; dims.len()];
    for &k in keep {
        kept_mask[k] = true;
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|&k| kept_mask[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|&k| !kept_mask[k]).collect();
    let kept_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // strides[k] = product of dims after factor k (row-major multi-index)
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |factors: &[usize], mut idx: usize| -> usize {
        let mut out = 0;
        for &k in factors.iter().rev() {
            out += (idx % dims[k]) * strides[k];
            idx /= dims[k];
        }
        out
    };
    let kept_off: Vec<usize> = (0..kept_dim).map(|i| offset(&kept, i)).collect();
    let traced_off: Vec<usize> = (0..traced_dim).map(|t| offset(&traced, t)).collect();

    let m = rho.matrix().inner();
    let reduced = DMatrix::from_fn(kept_dim, kept_dim, |r, c| {
        traced_off
            .iter()
            .map(|&t| m[(kept_off[r] + t, kept_off[c] + t)])
            .sum()
    });
    DensityOperator::new(ComplexMatrix(reduced))
}

/// `S(XY) - S(Y)` for a bipartite operator with factor dimensions `split = (dX, dY)`.
pub fn conditional_entropy(rho: &DensityOperator, split: (usize, usize)) -> Result<f64> {
    let (dx, dy) = split;
    if dx * dy != rho.dim() {
        return Err(Error::Dimension(format!(
            "split {dx}x{dy} does not match dimension {}",
            rho.dim()
        )));
    }
    let rho_y = partial_trace(rho, &[dx, dy], &[1])?;
    Ok(von_neumann_entropy(rho)? - von_neumann_entropy(&rho_y)?)
}

/// Haar-random unitary, deterministic in `seed`.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(dim, &mut rng)
}

/// Orthonormalizes a matrix of standard complex Gaussians and fixes the
/// phases of R's diagonal so the result is Haar distributed.
pub fn random_unitary_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    assert!(dim >= 1, "unitary dimension must be at least 1");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    });
    let qr = ginibre.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    ComplexMatrix(q)
}
