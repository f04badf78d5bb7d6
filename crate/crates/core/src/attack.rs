//! Eve's collective attack and its decomposition into ancilla vectors.
//!
//! An attack is a pair of unitaries on `transit ⊗ ancilla`: `U_F` applied on
//! the way from A to B, `U_R` on the way back. The transit qubit is the first
//! tensor factor and the ancilla starts in `|0⟩_E`, so
//!
//! ```text
//! U_F |0,0⟩ = |0,e_0⟩ + |1,e_1⟩        U_F |1,0⟩ = |0,e_2⟩ + |1,e_3⟩
//! U_R |i,e_j⟩ = |0,e_{i,j}^0⟩ + |1,e_{i,j}^1⟩
//! V = U_R U_F:  V|0,0⟩ = |0,g_0⟩ + |1,g_1⟩,  V|1,0⟩ = |0,g_2⟩ + |1,g_3⟩
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{
    self, add, basis, inner, kron_vec, norm_sqr, outer, ComplexMatrix, DensityOperator, C64,
    STRUCTURAL_TOL,
};

/// Largest ancilla dimension accepted by the tooling.
pub const MAX_ANCILLA_DIM: usize = 16;

/// A collective attack `(U_F, U_R)` acting on `qubit ⊗ C^d_E`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveAttack {
    ancilla_dim: usize,
    forward: ComplexMatrix,
    reverse: ComplexMatrix,
}

impl CollectiveAttack {
    pub fn new(ancilla_dim: usize, forward: ComplexMatrix, reverse: ComplexMatrix) -> Result<Self> {
        if !(1..=MAX_ANCILLA_DIM).contains(&ancilla_dim) {
            return Err(Error::InvalidAttack(format!(
                "ancilla dimension {ancilla_dim} outside 1..={MAX_ANCILLA_DIM}"
            )));
        }
        let n = 2 * ancilla_dim;
        for (name, m) in [("U_F", &forward), ("U_R", &reverse)] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
            m.ensure_unitary(STRUCTURAL_TOL)?;
        }
        Ok(Self {
            ancilla_dim,
            forward,
            reverse,
        })
    }

    /// The trivial attack: Eve leaves the qubit alone in both directions.
    pub fn identity(ancilla_dim: usize) -> Result<Self> {
        let n = 2 * ancilla_dim;
        Self::new(ancilla_dim, ComplexMatrix::identity(n), ComplexMatrix::identity(n))
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn forward(&self) -> &ComplexMatrix {
        &self.forward
    }

    pub fn reverse(&self) -> &ComplexMatrix {
        &self.reverse
    }

    /// `V = U_R U_F`, the round trip seen when B reflects.
    pub fn reflection(&self) -> ComplexMatrix {
        &self.reverse * &self.forward
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: AttackFile = serde_json::from_str(s)?;
        file.into_attack()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&AttackFile::from_attack(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// On-disk attack format: row-major `[re, im]` pairs.
#[derive(Debug, Serialize, Deserialize)]
struct AttackFile {
    d_e: usize,
    u_f: Vec<[f64; 2]>,
    u_r: Vec<[f64; 2]>,
}

impl AttackFile {
    fn from_attack(a: &CollectiveAttack) -> Self {
        let pairs = |m: &ComplexMatrix| m.row_major().into_iter().map(|z| [z.re, z.im]).collect();
        Self {
            d_e: a.ancilla_dim,
            u_f: pairs(&a.forward),
            u_r: pairs(&a.reverse),
        }
    }

    fn into_attack(self) -> Result<CollectiveAttack> {
        if !(1..=MAX_ANCILLA_DIM).contains(&self.d_e) {
            return Err(Error::InvalidAttack(format!(
                "d_e = {} outside 1..={MAX_ANCILLA_DIM}",
                self.d_e
            )));
        }
        let n = 2 * self.d_e;
        let build = |entries: Vec<[f64; 2]>| {
            ComplexMatrix::from_row_major(n, n, entries.into_iter().map(|[re, im]| C64::new(re, im)).collect())
        };
        CollectiveAttack::new(self.d_e, build(self.u_f)?, build(self.u_r)?)
    }
}

/// All ancilla vectors of an attack, as they appear in the security analysis.
#[derive(Clone, Debug)]
pub struct AttackDecomposition {
    /// `e_0 … e_3` from `U_F`.
    pub forward: [Vec<C64>; 4],
    /// `reverse[i][j][k] = e_{i,j}^k`.
    pub reverse: [[[Vec<C64>; 2]; 4]; 2],
    /// `g_0 … g_3` from `V = U_R U_F`.
    pub reflection: [Vec<C64>; 4],
}

/// Worst-case residuals of the structural identities a decomposition obeys.
#[derive(Clone, Copy, Debug, Default)]
pub struct DecompositionResiduals {
    /// `|n(e_0) + n(e_1) - 1|` and `|n(e_2) + n(e_3) - 1|`.
    pub forward_norms: f64,
    /// `|n(e_{i,j}^0) + n(e_{i,j}^1) - n(e_j)|` over all `(i, j)`.
    pub reverse_norms: f64,
    /// `|Re(⟨g_0|g_2⟩ + ⟨g_1|g_3⟩)|`.
    pub reflection_orthogonality: f64,
    /// Max entry of `g` minus its expansion in `e_{i,j}^k`.
    pub reflection_expansion: f64,
}

impl DecompositionResiduals {
    pub fn max(&self) -> f64 {
        self.forward_norms
            .max(self.reverse_norms)
            .max(self.reflection_orthogonality)
            .max(self.reflection_expansion)
    }
}

fn split_transit(v: &[C64]) -> [Vec<C64>; 2] {
    let d = v.len() / 2;
    [v[..d].to_vec(), v[d..].to_vec()]
}

pub fn decompose_attack(a: &CollectiveAttack) -> AttackDecomposition {
    let d = a.ancilla_dim;
    let n = 2 * d;
    let [e0, e1] = split_transit(&a.forward.column(0));
    let [e2, e3] = split_transit(&a.forward.column(d));
    let forward = [e0, e1, e2, e3];

    let reverse = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let input = kron_vec(&basis(i, 2), &forward[j]);
            split_transit(&a.reverse.apply(&input))
        })
    });

    let v = a.reflection();
    let [g0, g1] = split_transit(&v.apply(&basis(0, n)));
    let [g2, g3] = split_transit(&v.apply(&basis(d, n)));

    AttackDecomposition {
        forward,
        reverse,
        reflection: [g0, g1, g2, g3],
    }
}

impl AttackDecomposition {
    /// `⟨e_j|e_j⟩`.
    pub fn norm_forward(&self, j: usize) -> f64 {
        norm_sqr(&self.forward[j])
    }

    /// `⟨e_{i,j}^k|e_{i,j}^k⟩`.
    pub fn norm_reverse(&self, i: usize, j: usize, k: usize) -> f64 {
        norm_sqr(&self.reverse[i][j][k])
    }

    /// `Re⟨e_{i,j}^k | e_{i',j'}^{k'}⟩`.
    pub fn re_reverse(&self, (i, j, k): (usize, usize, usize), (i2, j2, k2): (usize, usize, usize)) -> f64 {
        inner(&self.reverse[i][j][k], &self.reverse[i2][j2][k2]).re
    }

    /// `Re⟨g_a|g_b⟩`.
    pub fn re_reflection(&self, a: usize, b: usize) -> f64 {
        inner(&self.reflection[a], &self.reflection[b]).re
    }

    /// `Λ_1 … Λ_4`: the cross products entering the per-term eigenvalue bounds.
    pub fn lambdas(&self) -> [f64; 4] {
        [
            self.re_reverse((0, 0, 0), (1, 3, 1)),
            self.re_reverse((0, 0, 1), (1, 3, 0)),
            self.re_reverse((1, 1, 1), (0, 2, 0)),
            self.re_reverse((1, 1, 0), (0, 2, 1)),
        ]
    }

    /// The two observable sums `(η₁, η₂)` evaluated directly on the vectors.
    pub fn etas(&self) -> (f64, f64) {
        let eta1 = self.re_reverse((0, 0, 0), (0, 2, 1)) + self.re_reverse((0, 0, 1), (0, 2, 0));
        let eta2 = self.re_reverse((1, 1, 0), (1, 3, 1)) + self.re_reverse((1, 1, 1), (1, 3, 0));
        (eta1, eta2)
    }

    /// `Q_X` from the reflection vectors: `½ - ½ Re(⟨g0|g1⟩ + ⟨g0|g3⟩ + ⟨g1|g2⟩ + ⟨g2|g3⟩)`.
    pub fn q_x(&self) -> f64 {
        0.5 - 0.5
            * (self.re_reflection(0, 1)
                + self.re_reflection(0, 3)
                + self.re_reflection(1, 2)
                + self.re_reflection(2, 3))
    }

    pub fn residuals(&self) -> DecompositionResiduals {
        let nf: Vec<f64> = (0..4).map(|j| self.norm_forward(j)).collect();
        let forward_norms = (nf[0] + nf[1] - 1.0).abs().max((nf[2] + nf[3] - 1.0).abs());

        let mut reverse_norms: f64 = 0.0;
        for i in 0..2 {
            for (j, &n) in nf.iter().enumerate() {
                let split = self.norm_reverse(i, j, 0) + self.norm_reverse(i, j, 1);
                reverse_norms = reverse_norms.max((split - n).abs());
            }
        }

        let reflection_orthogonality = (self.re_reflection(0, 2) + self.re_reflection(1, 3)).abs();

        let r = &self.reverse;
        let expected = [
            add(&r[0][0][0], &r[1][1][0]),
            add(&r[0][0][1], &r[1][1][1]),
            add(&r[0][2][0], &r[1][3][0]),
            add(&r[0][2][1], &r[1][3][1]),
        ];
        let reflection_expansion = expected
            .iter()
            .zip(&self.reflection)
            .flat_map(|(x, g)| x.iter().zip(g).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max);

        DecompositionResiduals {
            forward_norms,
            reverse_norms,
            reflection_orthogonality,
            reflection_expansion,
        }
    }
}

/// `ρ_ABE` on `A ⊗ B ⊗ E`, conditioned on a raw-key iteration.
///
/// A sent `|a⟩`, B measured `|b⟩`; Eve then holds `e_{b,2a+b}^0` or
/// `e_{b,2a+b}^1` depending on the (discarded) transit outcome.
pub fn build_rho_abe(a: &CollectiveAttack) -> Result<DensityOperator> {
    let dec = decompose_attack(a);
    let d = a.ancilla_dim;
    let mut acc = ComplexMatrix::zeros(4 * d, 4 * d).into_inner();
    for bit_a in 0..2 {
        for bit_b in 0..2 {
            let j = 2 * bit_a + bit_b;
            let ab = basis(2 * bit_a + bit_b, 4);
            for k in 0..2 {
                let v = kron_vec(&ab, &dec.reverse[bit_b][j][k]);
                acc += outer(&v).into_inner().map(|z| z * 0.5);
            }
        }
    }
    DensityOperator::new(ComplexMatrix::from_inner(acc))
}

/// Exact `S(A|E)` of the raw-key state, `S(AE) - S(E)`.
pub fn true_s_ae(a: &CollectiveAttack) -> Result<f64> {
    let d = a.ancilla_dim;
    let rho = build_rho_abe(a)?;
    let rho_ae = math::partial_trace(&rho, &[2, 2, d], &[0, 2])?;
    math::conditional_entropy(&rho_ae, (2, d))
}

/// Fills in the columns of a unitary that are not prescribed.
///
/// `fixed` lists `(column index, orthonormal column)`; the remaining columns
/// come from Gram-Schmidt on the standard basis.
fn complete_unitary(dim: usize, fixed: &[(usize, Vec<C64>)]) -> ComplexMatrix {
    let mut columns: Vec<Option<Vec<C64>>> = vec![None; dim];
    let mut span: Vec<Vec<C64>> = Vec::new();
    for (idx, col) in fixed {
        columns[*idx] = Some(col.clone());
        span.push(col.clone());
    }
    let mut candidates = (0..dim).map(|k| basis(k, dim));
    for slot in columns.iter_mut().filter(|c| c.is_none()) {
        loop {
            let mut v = candidates.next().expect("standard basis spans the space");
            for u in &span {
                let overlap = inner(u, &v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= overlap * y);
            }
            let n = norm_sqr(&v).sqrt();
            if n > 1e-6 {
                let v: Vec<C64> = v.iter().map(|z| z / n).collect();
                span.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    let columns: Vec<Vec<C64>> = columns.into_iter().map(Option::unwrap).collect();
    ComplexMatrix::from_columns(dim, &columns).expect("columns have length dim")
}

/// The zero-noise attack that reads the raw key through the reverse channel.
///
/// `U_F = I`, and `U_R |+,0⟩ = |+,0⟩`, `U_R |-,0⟩ = |+,1⟩`, which by linearity
/// sends `|0,0⟩ → |+,+⟩` and `|1,0⟩ → |+,-⟩`. The ancilla-`|1⟩` columns are
/// never reached by the protocol; they are filled by Gram-Schmidt on the
/// standard basis, giving `|0,1⟩ → |-,0⟩` and `|1,1⟩ → |-,1⟩`.
pub fn paper_attack() -> CollectiveAttack {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = vec![C64::new(s, 0.0), C64::new(s, 0.0)];
    let minus = vec![C64::new(s, 0.0), C64::new(-s, 0.0)];
    // input index = transit * 2 + ancilla
    let reverse = complete_unitary(
        4,
        &[(0, kron_vec(&plus, &plus)), (2, kron_vec(&plus, &minus))],
    );
    CollectiveAttack::new(2, ComplexMatrix::identity(4), reverse).expect("construction is unitary")
}

/// Single-qubit Stinespring unitary on `qubit ⊗ C^4` for the depolarizing
/// channel with bit-flip probability `q`: Kraus operators
/// `√(1-3λ/4) I, √(λ/4) X, √(λ/4) Y, √(λ/4) Z` with `λ = 2q`.
fn depolarizing_dilation(q: f64) -> ComplexMatrix {
    let lambda = 2.0 * q;
    let k0 = (1.0 - 0.75 * lambda).max(0.0).sqrt();
    let kp = (lambda / 4.0).sqrt();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    // Pauli matrices, row-major
    let paulis: [[C64; 4]; 4] = [
        [one, zero, zero, one],
        [zero, one, one, zero],
        [zero, -i, i, zero],
        [one, zero, zero, -one],
    ];
    let weights = [k0, kp, kp, kp];
    // W|t,0⟩ = Σ_k K_k|t⟩ ⊗ |k⟩, placed at input index t*4
    let image = |t: usize| -> Vec<C64> {
        let mut v = vec![zero; 8];
        for (k, (p, w)) in paulis.iter().zip(weights).enumerate() {
            for out in 0..2 {
                v[out * 4 + k] = p[out * 2 + t] * w;
            }
        }
        v
    };
    complete_unitary(8, &[(0, image(0)), (4, image(1))])
}

/// Independent depolarizing channels in both directions with Z-error rate `q`.
///
/// Eve's 16-dimensional ancilla is `F ⊗ R`; `U_F` dilates the forward channel
/// into `F` and `U_R` dilates the reverse channel into `R`.
pub fn depolarizing_attack(q: f64) -> Result<CollectiveAttack> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::Domain {
            value: q,
            domain: "[0, 1/2]",
        });
    }
    let w = depolarizing_dilation(q);
    let zero = C64::new(0.0, 0.0);
    // global index (t, f, r) -> t*16 + f*4 + r
    let idx = |t: usize, f: usize, r: usize| t * 16 + f * 4 + r;
    let mut forward = vec![zero; 32 * 32];
    let mut reverse = vec![zero; 32 * 32];
    for t in 0..2 {
        for f in 0..4 {
            for r in 0..4 {
                for t2 in 0..2 {
                    for x in 0..4 {
                        // forward: W on (t, f), identity on r
                        forward[idx(t2, x, r) * 32 + idx(t, f, r)] = w.get(t2 * 4 + x, t * 4 + f);
                        // reverse: W on (t, r), identity on f
                        reverse[idx(t2, f, x) * 32 + idx(t, f, r)] = w.get(t2 * 4 + x, t * 4 + r);
                    }
                }
            }
        }
    }
    CollectiveAttack::new(
        16,
        ComplexMatrix::from_row_major(32, 32, forward)?,
        ComplexMatrix::from_row_major(32, 32, reverse)?,
    )
}

/// Independent Haar-random `U_F` and `U_R`, deterministic in `seed`.
pub fn random_attack(ancilla_dim: usize, seed: u64) -> Result<CollectiveAttack> {
    if !(1..=MAX_ANCILLA_DIM).contains(&ancilla_dim) {
        return Err(Error::InvalidAttack(format!(
            "ancilla dimension {ancilla_dim} outside 1..={MAX_ANCILLA_DIM}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forward = math::random_unitary_with(2 * ancilla_dim, &mut rng);
    let reverse = math::random_unitary_with(2 * ancilla_dim, &mut rng);
    CollectiveAttack::new(ancilla_dim, forward, reverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_decomposition() {
        let dec = decompose_attack(&CollectiveAttack::identity(1).unwrap());
        assert_abs_diff_eq!(dec.norm_forward(0), 1.0);
        assert_abs_diff_eq!(dec.norm_forward(1), 0.0);
        assert_abs_diff_eq!(dec.norm_reverse(0, 0, 0), 1.0);
        assert_abs_diff_eq!(dec.norm_reverse(1, 3, 1), 1.0);
        assert_eq!(dec.lambdas(), [1.0, 0.0, 0.0, 0.0]);
        for (i, j, k) in [(0, 0, 1), (1, 3, 0), (1, 1, 0), (1, 1, 1), (0, 2, 0), (0, 2, 1)] {
            assert_eq!(dec.norm_reverse(i, j, k), 0.0);
        }
        assert!(dec.residuals().max() < 1e-15);
    }

    #[test]
    fn paper_attack_action() {
        let a = paper_attack();
        assert!(a.reverse().unitarity_deviation() < 1e-12);
        assert_eq!(a.forward(), &ComplexMatrix::identity(4));
        let h = 0.5;
        // |+,+⟩ and |+,-⟩
        let pp = vec![c(h), c(h), c(h), c(h)];
        let pm = vec![c(h), c(-h), c(h), c(-h)];
        let out0 = a.reverse().apply(&basis(0, 4));
        let out1 = a.reverse().apply(&basis(2, 4));
        for (x, y) in out0.iter().zip(&pp).chain(out1.iter().zip(&pm)) {
            assert!((x - y).norm() < 1e-12);
        }
        // the defining X-basis action
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus0 = vec![c(s), c(0.0), c(s), c(0.0)];
        let minus0 = vec![c(s), c(0.0), c(-s), c(0.0)];
        let plus1 = vec![c(0.0), c(s), c(0.0), c(s)];
        let got = a.reverse().apply(&plus0);
        assert!(got.iter().zip(&plus0).all(|(x, y)| (x - y).norm() < 1e-12));
        let got = a.reverse().apply(&minus0);
        assert!(got.iter().zip(&plus1).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    #[test]
    fn paper_attack_decomposition() {
        let dec = decompose_attack(&paper_attack());
        for (i, j) in [(0, 0), (1, 3)] {
            for k in 0..2 {
                assert_abs_diff_eq!(dec.norm_reverse(i, j, k), 0.5, epsilon = 1e-12);
            }
        }
        let l = dec.lambdas();
        assert_abs_diff_eq!(l[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn random_attacks_satisfy_invariants() {
        for seed in 0..100 {
            let a = random_attack(4, seed).unwrap();
            let r = decompose_attack(&a).residuals();
            assert!(r.max() <= STRUCTURAL_TOL, "seed {seed}: {r:?}");
        }
        for d in 1..=4 {
            let r = decompose_attack(&random_attack(d, 7).unwrap()).residuals();
            assert!(r.max() <= STRUCTURAL_TOL);
        }
    }

    #[test]
    fn random_attack_contract() {
        let a = random_attack(1, 11).unwrap();
        assert_eq!(a.forward().rows(), 2);
        assert_eq!(a, random_attack(1, 11).unwrap());
        assert_ne!(a, random_attack(1, 12).unwrap());
        assert!(random_attack(0, 1).is_err());
        assert!(random_attack(17, 1).is_err());
    }

    #[test]
    fn rho_abe_identity() {
        let rho = build_rho_abe(&CollectiveAttack::identity(1).unwrap()).unwrap();
        let expected = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == j && (i == 0 || i == 3) {
                c(0.5)
            } else {
                c(0.0)
            }
        });
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rho_abe_paper_attack() {
        let rho = build_rho_abe(&paper_attack()).unwrap();
        // A,B perfectly correlated: no weight on |01⟩, |10⟩ blocks
        let dims = [2, 2, 2];
        let ab = math::partial_trace(&rho, &dims, &[0, 1]).unwrap();
        assert_abs_diff_eq!(ab.matrix().get(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.matrix().get(3, 3).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.matrix().get(1, 1).re, 0.0, epsilon = 1e-12);
        // Eve's conditional states |+⟩⟨+| and |-⟩⟨-|: entries of the E-block at A=B=0 and A=B=1
        let e0 = [rho.matrix().get(0, 0), rho.matrix().get(0, 1)];
        let e1 = [rho.matrix().get(6, 6), rho.matrix().get(6, 7)];
        assert_abs_diff_eq!(e0[0].re, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(e0[1].re, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(e1[0].re, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(e1[1].re, -0.25, epsilon = 1e-12);
    }

    #[test]
    fn rho_abe_valid_for_random_attacks() {
        for seed in 0..20 {
            let a = random_attack(1 + (seed as usize % 4), seed).unwrap();
            let rho = build_rho_abe(&a).unwrap();
            assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-12);
            assert!(rho.eigenvalues().unwrap().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn true_s_ae_values() {
        assert_abs_diff_eq!(true_s_ae(&CollectiveAttack::identity(1).unwrap()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(true_s_ae(&paper_attack()).unwrap(), 0.0, epsilon = 1e-9);
        for seed in 0..20 {
            let s = true_s_ae(&random_attack(3, seed).unwrap()).unwrap();
            assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&s));
        }
    }

    #[test]
    fn depolarizing_is_unitary_and_noiseless_at_zero() {
        let a = depolarizing_attack(0.079).unwrap();
        assert_eq!(a.ancilla_dim(), 16);
        assert!(a.forward().unitarity_deviation() < 1e-12);
        assert!(a.reverse().unitarity_deviation() < 1e-12);
        let dec = decompose_attack(&depolarizing_attack(0.0).unwrap());
        assert_abs_diff_eq!(dec.norm_forward(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.q_x(), 0.0, epsilon = 1e-15);
        assert!(depolarizing_attack(0.6).is_err());
        assert!(depolarizing_attack(-0.1).is_err());
    }

    #[test]
    fn depolarizing_round_trip_error() {
        for q in [0.02, 0.079, 0.11, 0.5] {
            let dec = decompose_attack(&depolarizing_attack(q).unwrap());
            assert_abs_diff_eq!(dec.q_x(), 2.0 * q * (1.0 - q), epsilon = 1e-12);
            assert_abs_diff_eq!(dec.norm_forward(1), q, epsilon = 1e-12);
        }
    }

    #[test]
    fn attack_json_round_trip_and_rejection() {
        let a = random_attack(2, 3).unwrap();
        let back = CollectiveAttack::from_json_str(&a.to_json_string().unwrap()).unwrap();
        assert_eq!(a, back);

        let mut bad = AttackFile::from_attack(&a);
        bad.u_r[0][0] += 0.01;
        let err = CollectiveAttack::from_json_str(&serde_json::to_string(&bad).unwrap()).unwrap_err();
        match err {
            Error::NotUnitary { max_deviation } => assert!(max_deviation > 1e-3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(CollectiveAttack::from_json_str(r#"{"d_e":1,"u_f":[[1,0]],"u_r":[[1,0]]}"#).is_err());
        assert!(CollectiveAttack::from_json_str(r#"{"d_e":0,"u_f":[],"u_r":[]}"#).is_err());
    }
}
