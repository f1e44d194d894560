//! Clifford systems: the skew representations of C_7 on R^16 and their lift
//! to the symmetric system P_0..P_8 on R^32.
//!
//! Every matrix here is a signed permutation with entries in {-1, 0, 1}, so
//! the Clifford relations are verified with integer arithmetic and zero
//! residual.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::octonion::{mult_matrix, Side};
use crate::scalar::Scalar;

/// A signed permutation matrix: column j has a single entry `sign[j]` in row
/// `row[j]`. Applying one is a relabeling, which keeps exact arithmetic cheap.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignedPerm {
    pub row: Vec<usize>,
    pub sign: Vec<i8>,
}

impl SignedPerm {
    pub fn identity(n: usize) -> Self {
        SignedPerm {
            row: (0..n).collect(),
            sign: vec![1; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.row.len()
    }

    /// Extract a signed permutation from a matrix known to be one.
    pub fn from_mat<S: Scalar>(m: &Mat<S>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::dim("signed permutation", m.rows, m.cols));
        }
        let mut row = vec![usize::MAX; m.cols];
        let mut sign = vec![0i8; m.cols];
        for j in 0..m.cols {
            for i in 0..m.rows {
                let e = &m[(i, j)];
                if e.is_zero() {
                    continue;
                }
                if row[j] != usize::MAX {
                    return Err(Error::Invalid("column with two nonzero entries".into()));
                }
                row[j] = i;
                sign[j] = if e.add(&S::one()).is_zero() {
                    -1
                } else if e.sub(&S::one()).is_zero() {
                    1
                } else {
                    return Err(Error::Invalid("entry not in {-1,0,1}".into()));
                };
            }
            if row[j] == usize::MAX {
                return Err(Error::Invalid("zero column".into()));
            }
        }
        Ok(SignedPerm { row, sign })
    }

    pub fn apply<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.dim());
        let mut out = vec![S::zero(); v.len()];
        for j in 0..v.len() {
            out[self.row[j]] = if self.sign[j] < 0 {
                v[j].neg()
            } else {
                v[j].clone()
            };
        }
        out
    }

    /// self ∘ other as matrices (first other, then self).
    pub fn compose(&self, other: &SignedPerm) -> SignedPerm {
        let n = self.dim();
        assert_eq!(n, other.dim());
        let mut row = vec![0usize; n];
        let mut sign = vec![1i8; n];
        for j in 0..n {
            let mid = other.row[j];
            row[j] = self.row[mid];
            sign[j] = other.sign[j] * self.sign[mid];
        }
        SignedPerm { row, sign }
    }

    pub fn transpose(&self) -> SignedPerm {
        let n = self.dim();
        let mut row = vec![0usize; n];
        let mut sign = vec![1i8; n];
        for j in 0..n {
            row[self.row[j]] = j;
            sign[self.row[j]] = self.sign[j];
        }
        SignedPerm { row, sign }
    }

    pub fn neg(&self) -> SignedPerm {
        SignedPerm {
            row: self.row.clone(),
            sign: self.sign.iter().map(|s| -s).collect(),
        }
    }

    pub fn mat<S: Scalar>(&self) -> Mat<S> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for j in 0..n {
            m[(self.row[j], j)] = if self.sign[j] < 0 {
                S::one().neg()
            } else {
                S::one()
            };
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.transpose()
    }

    pub fn is_skew(&self) -> bool {
        *self == self.transpose().neg()
    }
}

/// The anticommutator P Q + Q P of two signed permutations, as an integer
/// matrix (entries in {-2..2}).
fn anticommutator(p: &SignedPerm, q: &SignedPerm) -> Vec<Vec<i32>> {
    let n = p.dim();
    let mut m = vec![vec![0i32; n]; n];
    for (sp, j) in [(p.compose(q), 0), (q.compose(p), 0)] {
        let _ = j;
        for c in 0..n {
            m[sp.row[c]][c] += sp.sign[c] as i32;
        }
    }
    m
}

fn anticommutator_residual(p: &SignedPerm, q: &SignedPerm, delta: i32) -> i32 {
    let m = anticommutator(p, q);
    let n = p.dim();
    let mut worst = 0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 2 * delta } else { 0 };
            worst = worst.max((m[i][j] - want).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// skew representations of C_7 on R^16
// ---------------------------------------------------------------------------

/// Skew representation ρ_1..ρ_k of the antisymmetric Clifford algebra C_k:
/// ρ_iρ_j + ρ_jρ_i = -2δ_ij, each ρ_i skew-symmetric orthogonal.
#[derive(Clone, Debug)]
pub struct SkewRep {
    pub k: usize,
    pub dim: usize,
    pub rho: Vec<SignedPerm>,
}

impl SkewRep {
    /// Max integer residual over all Clifford relations and skewness checks.
    pub fn residual(&self) -> i32 {
        let mut worst = 0;
        for i in 0..self.k {
            if !self.rho[i].is_skew() {
                worst = worst.max(1);
            }
            for j in 0..self.k {
                let delta = if i == j { -1 } else { 0 };
                worst = worst.max(anticommutator_residual(&self.rho[i], &self.rho[j], delta));
            }
        }
        worst
    }

    pub fn verify(&self) -> Result<()> {
        let r = self.residual();
        if r != 0 {
            return Err(Error::Invalid(format!(
                "skew representation violates Clifford relations (residual {r})"
            )));
        }
        Ok(())
    }
}

/// ρ_i acting block-diagonally on O⊕O = R^16 by octonion multiplication by
/// e_i: right side sends (x, y) to (x e_i, y e_i), left side to (e_i x, e_i y).
/// The two sides are the two inequivalent representations, one per family.
pub fn build_skew_rep(side: Side) -> SkewRep {
    let mut rho = Vec::with_capacity(7);
    for i in 1..8 {
        let m8 = mult_matrix::<crate::scalar::Exact>(i, side);
        let p8 = SignedPerm::from_mat(&m8).expect("basis multiplication is a signed permutation");
        // block diagonal on R^16
        let mut row = Vec::with_capacity(16);
        let mut sign = Vec::with_capacity(16);
        for block in 0..2 {
            for j in 0..8 {
                row.push(block * 8 + p8.row[j]);
                sign.push(p8.sign[j]);
            }
        }
        rho.push(SignedPerm { row, sign });
    }
    SkewRep { k: 7, dim: 16, rho }
}

// ---------------------------------------------------------------------------
// symmetric Clifford systems on R^32
// ---------------------------------------------------------------------------

/// Symmetric Clifford system P_0..P_m on R^{2l}:
/// P_aP_b + P_bP_a = 2δ_ab, each P_a a symmetric orthogonal involution.
#[derive(Clone, Debug)]
pub struct CliffordSystem {
    pub m: usize,
    pub halfdim: usize,
    pub p: Vec<SignedPerm>,
}

impl CliffordSystem {
    pub fn dim(&self) -> usize {
        2 * self.halfdim
    }

    /// Max integer residual over the symmetric Clifford relations.
    pub fn residual(&self) -> i32 {
        let mut worst = 0;
        for a in 0..=self.m {
            if !self.p[a].is_symmetric() {
                worst = worst.max(1);
            }
            for b in 0..=self.m {
                let delta = i32::from(a == b);
                worst = worst.max(anticommutator_residual(&self.p[a], &self.p[b], delta));
            }
        }
        worst
    }

    pub fn verify(&self) -> Result<()> {
        let r = self.residual();
        if r != 0 {
            return Err(Error::Invalid(format!(
                "Clifford system violates symmetric relations (residual {r})"
            )));
        }
        Ok(())
    }

    pub fn apply<S: Scalar>(&self, a: usize, v: &[S]) -> Vec<S> {
        self.p[a].apply(v)
    }

    /// P_c = Σ c_a P_a for a coefficient vector c.
    pub fn combination<S: Scalar>(&self, c: &[S]) -> Mat<S> {
        assert_eq!(c.len(), self.m + 1);
        let n = self.dim();
        let mut m: Mat<S> = Mat::zeros(n, n);
        for a in 0..=self.m {
            for j in 0..n {
                let i = self.p[a].row[j];
                let term = if self.p[a].sign[j] < 0 {
                    c[a].neg()
                } else {
                    c[a].clone()
                };
                m[(i, j)] = m[(i, j)].add(&term);
            }
        }
        m
    }
}

/// Lift a skew C_7 representation on R^16 to the symmetric system on
/// R^32 = R^16 ⊕ R^16:
///   P_0:(c,d) ↦ (c,-d),  P_1:(c,d) ↦ (d,c),  P_{1+i}:(c,d) ↦ (ρ_i(d), -ρ_i(c)).
pub fn lift_symmetric_system(rep: &SkewRep) -> Result<CliffordSystem> {
    rep.verify()?;
    let l = rep.dim;
    let n = 2 * l;
    let mut p = Vec::with_capacity(rep.k + 2);

    let mut p0 = SignedPerm::identity(n);
    for j in l..n {
        p0.sign[j] = -1;
    }
    p.push(p0);

    let mut p1 = SignedPerm::identity(n);
    for j in 0..l {
        p1.row[j] = j + l;
        p1.row[j + l] = j;
    }
    p.push(p1);

    for rho in &rep.rho {
        // (c,d) ↦ (ρ(d), -ρ(c)): column j < l maps into the lower block with
        // a sign flip, column j ≥ l into the upper block.
        let mut row = vec![0usize; n];
        let mut sign = vec![1i8; n];
        for j in 0..l {
            row[j] = rho.row[j] + l;
            sign[j] = -rho.sign[j];
            row[j + l] = rho.row[j];
            sign[j + l] = rho.sign[j];
        }
        p.push(SignedPerm { row, sign });
    }

    let system = CliffordSystem {
        m: rep.k + 1,
        halfdim: l,
        p,
    };
    system.verify()?;
    Ok(system)
}

/// Minimal dimension of an irreducible module of the Clifford algebra C_k.
pub fn min_module_dim(k: usize) -> Result<usize> {
    const TABLE: [usize; 10] = [1, 2, 4, 4, 8, 8, 8, 8, 16, 32];
    TABLE
        .get(k)
        .copied()
        .ok_or_else(|| Error::Invalid(format!("C_{k} outside the tabulated range 0..=9")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::norm_f64;
    use crate::rng::SplitMix64;
    use crate::scalar::{Exact, Scalar};

    #[test]
    fn skew_rep_relations_hold_exactly_on_both_sides() {
        for side in [Side::Left, Side::Right] {
            let rep = build_skew_rep(side);
            assert_eq!(rep.k, 7);
            assert_eq!(rep.dim, 16);
            assert_eq!(rep.residual(), 0, "side {side:?}");
        }
    }

    #[test]
    fn rho_squares_to_minus_identity() {
        let rep = build_skew_rep(Side::Right);
        let sq = rep.rho[0].compose(&rep.rho[0]);
        assert_eq!(sq, SignedPerm::identity(16).neg());
    }

    #[test]
    fn rho_of_zeta_is_orthogonal_to_zeta() {
        // skewness: <ρ_i(ζ), ζ> = 0 for all ζ
        let rep = build_skew_rep(Side::Right);
        let mut rng = SplitMix64::new(8);
        for _ in 0..20 {
            let z: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
            for rho in &rep.rho {
                let rz = rho.apply(&z);
                let d: f64 = rz.iter().zip(&z).map(|(a, b)| a * b).sum();
                assert!(d.abs() < 1e-12 * norm_f64(&z).powi(2));
            }
        }
    }

    #[test]
    fn lifted_system_has_nine_matrices_on_r32_with_exact_relations() {
        for side in [Side::Left, Side::Right] {
            let system = lift_symmetric_system(&build_skew_rep(side)).unwrap();
            assert_eq!(system.m, 8);
            assert_eq!(system.dim(), 32);
            assert_eq!(system.residual(), 0);
        }
    }

    #[test]
    fn p0_squares_to_identity_and_anticommutes_with_p1() {
        let system = lift_symmetric_system(&build_skew_rep(Side::Right)).unwrap();
        assert_eq!(
            system.p[0].compose(&system.p[0]),
            SignedPerm::identity(32)
        );
        let pq = system.p[0].compose(&system.p[1]);
        let qp = system.p[1].compose(&system.p[0]);
        assert_eq!(pq, qp.neg());
    }

    #[test]
    fn unit_combinations_are_symmetric_orthogonal_involutions() {
        let system = lift_symmetric_system(&build_skew_rep(Side::Left)).unwrap();
        let mut rng = SplitMix64::new(10);
        for _ in 0..20 {
            let c = f64::sample_unit(&mut rng, 9);
            let m = system.combination(&c);
            let sym = m.sub(&m.transpose()).max_abs();
            let inv = m.matmul(&m).sub(&Mat::identity(32)).max_abs();
            assert!(sym < 1e-12, "symmetry {sym}");
            assert!(inv < 1e-12, "involution {inv}");
        }
        // exact unit coefficients give exactly zero residual
        let mut rng = SplitMix64::new(11);
        let c = Exact::sample_unit(&mut rng, 9);
        let m = system.combination(&c);
        assert_eq!(m.matmul(&m), Mat::<Exact>::identity(32));
    }

    #[test]
    fn module_dimension_table() {
        assert_eq!(min_module_dim(1).unwrap(), 2);
        assert_eq!(min_module_dim(3).unwrap(), 4);
        assert_eq!(min_module_dim(4).unwrap(), 8);
        assert_eq!(min_module_dim(9).unwrap(), 32);
        assert!(min_module_dim(10).is_err());
    }

    #[test]
    fn lift_rejects_invalid_rep() {
        let mut rep = build_skew_rep(Side::Left);
        rep.rho[0].sign[0] = -rep.rho[0].sign[0];
        assert!(lift_symmetric_system(&rep).is_err());
    }
}
