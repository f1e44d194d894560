//! Quaternions, octonions, and orthogonal multiplications.
//!
//! The octonion table comes from Cayley-Dickson doubling of the quaternions,
//! (a,b)(c,d) = (ac - d̄b, da + bc̄), over the basis
//! (e_0,...,e_7) = (1, i, j, k, ε, εi, εj, εk) with ε = e_4 the adjoined unit
//! and ij = k. Every basis product is a signed basis element, so the whole
//! algebra is two 8x8 integer tables.

use crate::error::{Error, Result};
use crate::mat::{dot, Mat};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Quaternion basis products: QUAT_IDX[x][y], QUAT_SIGN[x][y] encode
/// e_x · e_y = sign · e_idx over (1, i, j, k).
pub const QUAT_IDX: [[usize; 4]; 4] = [
    [0, 1, 2, 3],
    [1, 0, 3, 2],
    [2, 3, 0, 1],
    [3, 2, 1, 0],
];
pub const QUAT_SIGN: [[i8; 4]; 4] = [
    [1, 1, 1, 1],
    [1, -1, 1, -1],
    [1, -1, -1, 1],
    [1, 1, -1, -1],
];

const fn quat_conj_sign(x: usize) -> i8 {
    if x == 0 {
        1
    } else {
        -1
    }
}

/// Octonion basis product by Cayley-Dickson doubling on basis indices.
/// Returns (index, sign) with e_x · e_y = sign · e_index.
pub const fn oct_basis_product(x: usize, y: usize) -> (usize, i8) {
    let (xa, xb) = (x % 4, x / 4); // e_x = (q_{xa}, 0) if xb = 0, else (0, q_{xa})
    let (ya, yb) = (y % 4, y / 4);
    match (xb, yb) {
        // (a,0)(c,0) = (ac, 0)
        (0, 0) => (QUAT_IDX[xa][ya], QUAT_SIGN[xa][ya]),
        // (a,0)(0,d) = (0, da)
        (0, 1) => (QUAT_IDX[ya][xa] + 4, QUAT_SIGN[ya][xa]),
        // (0,b)(c,0) = (0, b c̄)
        (1, 0) => (
            QUAT_IDX[xa][ya] + 4,
            QUAT_SIGN[xa][ya] * quat_conj_sign(ya),
        ),
        // (0,b)(0,d) = (-d̄ b, 0)
        _ => (
            QUAT_IDX[ya][xa],
            -(QUAT_SIGN[ya][xa] * quat_conj_sign(ya)),
        ),
    }
}

/// Full 8x8 octonion tables, computed at compile time.
pub const OCT_IDX: [[usize; 8]; 8] = build_oct_idx();
pub const OCT_SIGN: [[i8; 8]; 8] = build_oct_sign();

const fn build_oct_idx() -> [[usize; 8]; 8] {
    let mut t = [[0usize; 8]; 8];
    let mut x = 0;
    while x < 8 {
        let mut y = 0;
        while y < 8 {
            t[x][y] = oct_basis_product(x, y).0;
            y += 1;
        }
        x += 1;
    }
    t
}

const fn build_oct_sign() -> [[i8; 8]; 8] {
    let mut t = [[0i8; 8]; 8];
    let mut x = 0;
    while x < 8 {
        let mut y = 0;
        while y < 8 {
            t[x][y] = oct_basis_product(x, y).1;
            y += 1;
        }
        x += 1;
    }
    t
}

/// An octonion with coefficients over (e_0,...,e_7).
#[derive(Clone, PartialEq, Debug)]
pub struct Octonion<S>(pub [S; 8]);

impl<S: Scalar> Octonion<S> {
    pub fn zero() -> Self {
        Octonion(std::array::from_fn(|_| S::zero()))
    }

    pub fn basis(k: usize) -> Self {
        let mut o = Self::zero();
        o.0[k] = S::one();
        o
    }

    pub fn from_coeffs(c: &[S]) -> Self {
        assert_eq!(c.len(), 8);
        Octonion(std::array::from_fn(|i| c[i].clone()))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for x in 0..8 {
            if self.0[x].is_zero() {
                continue;
            }
            for y in 0..8 {
                let k = OCT_IDX[x][y];
                let term = self.0[x].mul(&rhs.0[y]);
                let term = if OCT_SIGN[x][y] < 0 { term.neg() } else { term };
                out.0[k] = out.0[k].add(&term);
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Octonion(std::array::from_fn(|i| {
            if i == 0 {
                self.0[i].clone()
            } else {
                self.0[i].neg()
            }
        }))
    }

    pub fn norm2(&self) -> S {
        dot(&self.0, &self.0)
    }
}

/// Multiplication by a basis element, from the given side.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// The 8x8 matrix of x ↦ e_a·x (left) or x ↦ x·e_a (right); column j holds
/// the coefficients of the product against e_j. Orthogonal for every a,
/// skew-symmetric for a ≥ 1.
pub fn mult_matrix<S: Scalar>(index: usize, side: Side) -> Mat<S> {
    assert!(index < 8);
    let mut m = Mat::zeros(8, 8);
    for j in 0..8 {
        let (k, s) = match side {
            Side::Left => (OCT_IDX[index][j], OCT_SIGN[index][j]),
            Side::Right => (OCT_IDX[j][index], OCT_SIGN[j][index]),
        };
        m[(k, j)] = if s < 0 { S::one().neg() } else { S::one() };
    }
    m
}

/// Quaternion multiplication matrix over (1, i, j, k), same conventions.
pub fn quat_mult_matrix<S: Scalar>(index: usize, side: Side) -> Mat<S> {
    assert!(index < 4);
    let mut m = Mat::zeros(4, 4);
    for j in 0..4 {
        let (k, s) = match side {
            Side::Left => (QUAT_IDX[index][j], QUAT_SIGN[index][j]),
            Side::Right => (QUAT_IDX[j][index], QUAT_SIGN[j][index]),
        };
        m[(k, j)] = if s < 0 { S::one().neg() } else { S::one() };
    }
    m
}

// ---------------------------------------------------------------------------
// orthogonal multiplications
// ---------------------------------------------------------------------------

/// A bilinear map F: R^r x R^s -> R^n, F(x,y) = Σ_a x_a F_a y, stored through
/// its component matrices F_a of size n x s. Norm composition
/// |F(x,y)| = |x||y| is equivalent to the Hurwitz matrix equations
/// F_aᵀF_b + F_bᵀF_a = 2δ_ab I_s.
#[derive(Clone, Debug)]
pub struct OrthogonalMultiplication<S> {
    pub r: usize,
    pub s: usize,
    pub n: usize,
    pub components: Vec<Mat<S>>,
}

impl<S: Scalar> OrthogonalMultiplication<S> {
    pub fn new(components: Vec<Mat<S>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("orthogonal multiplication needs components"));
        }
        let n = components[0].rows;
        let s = components[0].cols;
        if components.iter().any(|f| f.rows != n || f.cols != s) {
            return Err(Error::dim(
                "orthogonal multiplication components",
                format!("{n}x{s}"),
                "mixed shapes",
            ));
        }
        Ok(OrthogonalMultiplication {
            r: components.len(),
            s,
            n,
            components,
        })
    }

    pub fn eval(&self, x: &[S], y: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.r);
        assert_eq!(y.len(), self.s);
        let mut z = vec![S::zero(); self.n];
        for (a, fa) in self.components.iter().enumerate() {
            let fy = fa.matvec(y);
            for (zi, fi) in z.iter_mut().zip(&fy) {
                *zi = zi.add(&x[a].mul(fi));
            }
        }
        z
    }

    /// Max-entry residual of the Hurwitz equations over all component pairs.
    pub fn hurwitz_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.r {
            for b in a..self.r {
                let fa = &self.components[a];
                let fb = &self.components[b];
                let mut m = fa.transpose().matmul(fb).add(&fb.transpose().matmul(fa));
                if a == b {
                    m = m.sub(&Mat::identity(self.s).scale(&S::from_i64(2)));
                }
                worst = worst.max(m.max_abs());
            }
        }
        worst
    }

    /// Max sampled relative residual of |F(x,y)|² - |x|²|y|².
    pub fn norm_composition_residual(&self, samples: usize, rng: &mut SplitMix64) -> f64 {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x: Vec<S> = (0..self.r).map(|_| S::sample(rng)).collect();
            let y: Vec<S> = (0..self.s).map(|_| S::sample(rng)).collect();
            let z = self.eval(&x, &y);
            let zz = dot(&z, &z);
            let xx = dot(&x, &x);
            let yy = dot(&y, &y);
            let res = zz.sub(&xx.mul(&yy)).abs();
            let scale = (xx.abs() * yy.abs()).max(1.0);
            worst = worst.max(res / scale);
        }
        worst
    }
}

/// Verdicts from checking one orthogonal multiplication both ways.
#[derive(Clone, Debug)]
pub struct OmCheck {
    pub hurwitz_residual: f64,
    pub norm_residual: f64,
    pub hurwitz_pass: bool,
    pub norm_pass: bool,
}

impl OmCheck {
    pub fn pass(&self) -> bool {
        self.hurwitz_pass && self.norm_pass
    }

    /// The two characterizations are equivalent, so the verdicts must agree.
    pub fn consistent(&self) -> bool {
        self.hurwitz_pass == self.norm_pass
    }
}

/// Checks the Hurwitz equations and sampled norm composition.
pub fn verify_orthogonal_multiplication<S: Scalar>(
    om: &OrthogonalMultiplication<S>,
    samples: usize,
    tol: f64,
    rng: &mut SplitMix64,
) -> OmCheck {
    let h = om.hurwitz_residual();
    let n = om.norm_composition_residual(samples, rng);
    OmCheck {
        hurwitz_residual: h,
        norm_residual: n,
        hurwitz_pass: h <= tol,
        norm_pass: n <= tol,
    }
}

/// The left (or right) quaternion multiplication as a type-[4,4,4]
/// orthogonal multiplication.
pub fn quaternion_multiplication<S: Scalar>(side: Side) -> OrthogonalMultiplication<S> {
    OrthogonalMultiplication::new((0..4).map(|a| quat_mult_matrix(a, side)).collect()).unwrap()
}

/// Builds the type-[3,4,8] multiplication (√2·c_a | w_a), a = 1..3, from the
/// lower-right 4x4 blocks c_a of B_a and w_a of A_a. Components are the 8x4
/// transposes of the row-stacked 4x8 matrices.
pub fn multiplication_348<S: Scalar>(
    c: &[Mat<S>],
    w: &[Mat<S>],
) -> Result<OrthogonalMultiplication<S>> {
    if c.len() != 3 || w.len() != 3 {
        return Err(Error::dim("type-[3,4,8] data", 3, c.len().max(w.len())));
    }
    let sqrt2 = S::from_i64(2)
        .sqrt()
        .ok_or_else(|| Error::ExactUnsupported("sqrt(2) not representable".into()))?;
    let mut comps = Vec::with_capacity(3);
    for a in 0..3 {
        if c[a].rows != 4 || c[a].cols != 4 || w[a].rows != 4 || w[a].cols != 4 {
            return Err(Error::dim("type-[3,4,8] blocks", "4x4", "other"));
        }
        let m = Mat::hstack(&[&c[a].scale(&sqrt2), &w[a]]);
        comps.push(m.transpose());
    }
    OrthogonalMultiplication::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    type Of = Octonion<f64>;
    type Oe = Octonion<Exact>;

    #[test]
    fn identity_element() {
        for a in 0..8 {
            let e = Oe::basis(a);
            assert_eq!(Oe::basis(0).mul(&e), e);
            assert_eq!(e.mul(&Oe::basis(0)), e);
        }
    }

    #[test]
    fn imaginary_units_square_to_minus_one() {
        for a in 1..8 {
            let e = Oe::basis(a);
            let mut want = Oe::zero();
            want.0[0] = Exact::from_i64(-1);
            assert_eq!(e.mul(&e), want);
        }
    }

    #[test]
    fn cayley_dickson_oracle_e1_e4() {
        // (i,0)·(0,1) = (0, 1·i + 0) = (0,i) = e_5
        let p = Oe::basis(1).mul(&Oe::basis(4));
        assert_eq!(p, Oe::basis(5));
    }

    #[test]
    fn norm_composition_on_random_samples() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let x = Of::from_coeffs(&(0..8).map(|_| rng.normal()).collect::<Vec<_>>());
            let y = Of::from_coeffs(&(0..8).map(|_| rng.normal()).collect::<Vec<_>>());
            let lhs = x.mul(&y).norm2();
            let rhs = x.norm2() * y.norm2();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
        }
    }

    #[test]
    fn alternativity_on_sampled_triples() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..100 {
            let x = Of::from_coeffs(&(0..8).map(|_| rng.normal()).collect::<Vec<_>>());
            let y = Of::from_coeffs(&(0..8).map(|_| rng.normal()).collect::<Vec<_>>());
            let xxy = x.mul(&x).mul(&y);
            let xxy2 = x.mul(&x.mul(&y));
            for k in 0..8 {
                assert!((xxy.0[k] - xxy2.0[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mult_matrices_are_orthogonal_and_skew() {
        for side in [Side::Left, Side::Right] {
            assert_eq!(mult_matrix::<Exact>(0, side), Mat::identity(8));
            for a in 0..8 {
                let m = mult_matrix::<Exact>(a, side);
                let id = Mat::<Exact>::identity(8);
                assert_eq!(m.transpose().matmul(&m), id, "orthogonality a={a}");
                if a >= 1 {
                    assert_eq!(m.transpose(), m.neg(), "skewness a={a}");
                    assert_eq!(m.matmul(&m), id.neg(), "square -I a={a}");
                }
            }
        }
    }

    #[test]
    fn left_mult_matrices_satisfy_clifford_relations() {
        for a in 1..8 {
            for b in 1..8 {
                let la = mult_matrix::<Exact>(a, Side::Left);
                let lb = mult_matrix::<Exact>(b, Side::Left);
                let anti = la.matmul(&lb).add(&lb.matmul(&la));
                let want = if a == b {
                    Mat::<Exact>::identity(8).scale(&Exact::from_i64(-2))
                } else {
                    Mat::zeros(8, 8)
                };
                assert_eq!(anti, want, "pair ({a},{b})");
            }
        }
    }

    #[test]
    fn left_and_right_differ_at_index_4() {
        let l = mult_matrix::<Exact>(4, Side::Left);
        let r = mult_matrix::<Exact>(4, Side::Right);
        assert_ne!(l, r);
    }

    #[test]
    fn quaternion_multiplication_is_hurwitz_exact() {
        for side in [Side::Left, Side::Right] {
            let om = quaternion_multiplication::<Exact>(side);
            assert_eq!(om.hurwitz_residual(), 0.0);
        }
    }

    #[test]
    fn diagonal_hurwitz_is_zero_for_any_orthogonal_component() {
        let om = OrthogonalMultiplication::new(vec![mult_matrix::<f64>(3, Side::Left)]).unwrap();
        assert!(om.hurwitz_residual() < 1e-15);
    }

    #[test]
    fn random_bilinear_map_fails_both_checks() {
        let mut rng = SplitMix64::new(5);
        let comps: Vec<Mat<f64>> = (0..3)
            .map(|_| Mat::from_fn(8, 4, |_, _| rng.normal()))
            .collect();
        let om = OrthogonalMultiplication::new(comps).unwrap();
        let check = verify_orthogonal_multiplication(&om, 64, 1e-9, &mut rng);
        assert!(!check.hurwitz_pass);
        assert!(!check.norm_pass);
        assert!(check.consistent());
    }

    #[test]
    fn hurwitz_and_norm_composition_agree_on_constructed_and_perturbed_maps() {
        // 200 candidates: half valid (sign twists of quaternion
        // multiplications), half perturbed; the verdicts must agree.
        let mut rng = SplitMix64::new(6);
        for trial in 0..200 {
            let base = quaternion_multiplication::<f64>(if trial % 4 < 2 {
                Side::Left
            } else {
                Side::Right
            });
            let mut comps = base.components.clone();
            let valid = trial % 2 == 0;
            if valid {
                for m in comps.iter_mut() {
                    if rng.next_f64() < 0.5 {
                        *m = m.neg();
                    }
                }
            } else {
                let k = (rng.next_u64() % 4) as usize;
                let i = (rng.next_u64() % 4) as usize;
                let j = (rng.next_u64() % 4) as usize;
                comps[k][(i, j)] += 0.05 + rng.next_f64() * 0.5;
            }
            let om = OrthogonalMultiplication::new(comps).unwrap();
            let check = verify_orthogonal_multiplication(&om, 48, 1e-9, &mut rng);
            assert!(check.consistent(), "trial {trial}: {check:?}");
            assert_eq!(check.pass(), valid, "trial {trial}");
        }
    }

    #[test]
    fn degenerate_348_with_orthogonal_w_and_zero_c() {
        // c_a = 0 and w_a from a quaternion triple: passes exactly
        let zeros: Vec<Mat<Exact>> = (0..3).map(|_| Mat::zeros(4, 4)).collect();
        let w: Vec<Mat<Exact>> = (1..4).map(|a| quat_mult_matrix(a, Side::Left)).collect();
        let om = multiplication_348(&zeros, &w).unwrap();
        assert_eq!(om.hurwitz_residual(), 0.0);

        // non-orthogonal w with zero c fails
        let wbad: Vec<Mat<f64>> = (0..3)
            .map(|a| Mat::from_fn(4, 4, |i, j| ((i + a * j) % 3) as f64))
            .collect();
        let zf: Vec<Mat<f64>> = (0..3).map(|_| Mat::zeros(4, 4)).collect();
        let om = multiplication_348(&zf, &wbad).unwrap();
        assert!(om.hurwitz_residual() > 1e-3);
    }
}
