//! FKM geometry: the Cartan-Münzner quartic of a Clifford system, focal
//! manifold sampling, and focal frames.
//!
//! Conventions. The raw Clifford quartic |x|⁴ - 2Σ⟨P_a x, x⟩² equals +1 on
//! the Clifford-Stiefel manifold, so the polynomial used everywhere is its
//! negative F := -(|x|⁴ - 2Σ⟨P_a x, x⟩²). Then M₊ = F⁻¹(1) ∩ S³¹ has
//! codimension 8 and M₋ = F⁻¹(-1) ∩ S³¹ is the Clifford-Stiefel manifold of
//! codimension 9, and (m₊, m₋) = (7, 8).

use crate::clifford::{build_skew_rep, lift_symmetric_system, CliffordSystem, SkewRep};
use crate::error::{Error, Result};
use crate::mat::{axpy, dot, joint_kernel, norm_f64, orthonormalize, Mat};
use crate::octonion::{oct_basis_product, Side};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// One of the two FKM families with multiplicity pair (7,8): the skew
/// representation of C₇ on R¹⁶ by right (or left) octonion multiplication,
/// lifted to the symmetric Clifford system P₀..P₈ on R³².
#[derive(Clone, Debug)]
pub struct FkmFamily {
    pub side: Side,
    pub rep: SkewRep,
    pub system: CliffordSystem,
}

impl FkmFamily {
    pub fn new(side: Side) -> Result<FkmFamily> {
        let rep = build_skew_rep(side);
        let system = lift_symmetric_system(&rep)?;
        Ok(FkmFamily { side, rep, system })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn m_plus(&self) -> usize {
        7
    }

    pub fn m_minus(&self) -> usize {
        8
    }

    // -- Cartan-Münzner polynomial -----------------------------------------

    /// F(x) = -(|x|⁴ - 2Σ_a ⟨P_a x, x⟩²).
    pub fn eval_f<S: Scalar>(&self, x: &[S]) -> S {
        let n2 = dot(x, x);
        let mut s = n2.mul(&n2).neg();
        let two = S::from_i64(2);
        for a in 0..=self.system.m {
            let q = dot(&self.system.apply(a, x), x);
            s = s.add(&two.mul(&q.mul(&q)));
        }
        s
    }

    /// ∇F(x) = -(4|x|²x - 8Σ_a ⟨P_a x, x⟩ P_a x), exact polynomial gradient.
    pub fn grad_f<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n2 = dot(x, x);
        let c = S::from_i64(-4).mul(&n2);
        let mut g: Vec<S> = x.iter().map(|xi| xi.mul(&c)).collect();
        let eight = S::from_i64(8);
        for a in 0..=self.system.m {
            let px = self.system.apply(a, x);
            let q = dot(&px, x);
            let coef = eight.mul(&q);
            axpy(&mut g, &coef, &px);
        }
        g
    }

    /// ΔF from the term-by-term Laplacians: Δ|x|⁴ = (4n+8)|x|² on Rⁿ and
    /// Δ⟨P_a x,x⟩² = 8|x|² (each P_a is trace-free orthogonal), which gives
    /// 8|x|² for this family.
    pub fn laplacian_f<S: Scalar>(&self, x: &[S]) -> S {
        let n = self.dim() as i64;
        let m1 = (self.system.m + 1) as i64;
        let n2 = dot(x, x);
        let coef = S::from_i64(-(4 * n + 8) + 16 * m1);
        coef.mul(&n2)
    }

    /// The full symmetric 4-linear form D⁴F[u₁,u₂,u₃,u₄], used to read off
    /// second and third fundamental forms from the quartic.
    pub fn d4f<S: Scalar>(&self, u: [&[S]; 4]) -> S {
        let d = |a: &[S], b: &[S]| dot(a, b);
        let t1 = d(u[0], u[1])
            .mul(&d(u[2], u[3]))
            .add(&d(u[0], u[2]).mul(&d(u[1], u[3])))
            .add(&d(u[0], u[3]).mul(&d(u[1], u[2])));
        let mut t2 = S::zero();
        for a in 0..=self.system.m {
            let p0 = self.system.apply(a, u[0]);
            let p1 = self.system.apply(a, u[1]);
            let p2 = self.system.apply(a, u[2]);
            let q01 = d(&p0, u[1]);
            let q23 = d(&p2, u[3]);
            let q02 = d(&p0, u[2]);
            let q13 = d(&p1, u[3]);
            let q03 = d(&p0, u[3]);
            let q12 = d(&p1, u[2]);
            t2 = t2
                .add(&q01.mul(&q23))
                .add(&q02.mul(&q13))
                .add(&q03.mul(&q12));
        }
        // F = -(|x|⁴ - 2Σ q²):  D⁴F = -8·t1 + 16·t2
        S::from_i64(-8).mul(&t1).add(&S::from_i64(16).mul(&t2))
    }

    /// Membership residual for the Clifford-Stiefel manifold M₋:
    /// max of | |x|² - 1 | and all |⟨P_a x, x⟩|.
    pub fn membership_residual<S: Scalar>(&self, x: &[S]) -> f64 {
        let mut worst = dot(x, x).sub(&S::one()).abs();
        for a in 0..=self.system.m {
            worst = worst.max(dot(&self.system.apply(a, x), x).abs());
        }
        worst
    }
}

/// Which focal manifold a point belongs to; fixes the sign of the polynomial
/// in fundamental-form extraction (the expansion is taken for the manifold
/// where the polynomial equals +1).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Focal {
    /// F = +1, codimension 8, shape spectrum multiplicities (0,+1,-1) = (7,8,8).
    Plus,
    /// F = -1, the Clifford-Stiefel manifold, codimension 9,
    /// multiplicities (8,7,7).
    Minus,
}

impl Focal {
    pub fn extraction_sign(self) -> i64 {
        match self {
            Focal::Plus => 1,
            Focal::Minus => -1,
        }
    }
}

// ---------------------------------------------------------------------------
// Cartan-Münzner verification
// ---------------------------------------------------------------------------

/// Residuals of the two Cartan-Münzner equations at one point:
/// |∇F|² - g²|x|^{2g-2} and ΔF - (m₋-m₊)g²|x|^{g-2}/2 with g = 4.
pub fn cartan_munzner_residual<S: Scalar>(family: &FkmFamily, x: &[S]) -> (f64, f64) {
    let n2 = dot(x, x);
    let g = family.grad_f(x);
    let g2 = dot(&g, &g);
    let want_grad = S::from_i64(16).mul(&n2.mul(&n2).mul(&n2));
    let r1 = g2.sub(&want_grad);
    let lap = family.laplacian_f(x);
    let want_lap = S::from_i64(8).mul(&n2);
    let r2 = lap.sub(&want_lap);
    (r1.abs(), r2.abs())
}

/// Max relative residual of both equations over `samples` random points.
pub fn verify_cartan_munzner<S: Scalar>(
    family: &FkmFamily,
    samples: usize,
    rng: &mut SplitMix64,
) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x: Vec<S> = (0..family.dim()).map(|_| S::sample(rng)).collect();
        let (r1, r2) = cartan_munzner_residual(family, &x);
        let n2 = dot(&x, &x).abs().max(1.0);
        worst.0 = worst.0.max(r1 / (n2 * n2 * n2));
        worst.1 = worst.1.max(r2 / n2);
    }
    worst
}

/// Negative control: the candidate quartic |x|⁴ fails the Laplace equation on
/// R³² (Δ|x|⁴ = 136|x|² instead of 8|x|²). Returns that defect at x.
pub fn plain_quartic_laplace_defect<S: Scalar>(x: &[S]) -> f64 {
    let n2 = dot(x, x);
    let lap = S::from_i64(136).mul(&n2);
    let want = S::from_i64(8).mul(&n2);
    lap.sub(&want).abs()
}

// ---------------------------------------------------------------------------
// focal frames
// ---------------------------------------------------------------------------

/// Adapted orthonormal frame at a point x* of M₋: nine normals (the first
/// distinguished) and bases of the +1, -1, 0 eigenspaces of the shape
/// operator in the distinguished normal direction.
#[derive(Clone, Debug)]
pub struct MinusFrame<S> {
    pub point: Vec<S>,
    /// ε₀..ε₈; ε₀ defines the eigenspace splitting.
    pub normals: Vec<Vec<S>>,
    /// +1 eigenspace, 7 vectors.
    pub e_plus: Vec<Vec<S>>,
    /// -1 eigenspace, 7 vectors.
    pub e_minus: Vec<Vec<S>>,
    /// 0 eigenspace, 8 vectors.
    pub e_zero: Vec<Vec<S>>,
}

/// Adapted orthonormal frame at a point x of M₊ (always produced through the
/// mirror correspondence from a MinusFrame, never by level-set projection).
#[derive(Clone, Debug)]
pub struct PlusFrame<S> {
    pub point: Vec<S>,
    /// n₀..n₇; n₀ distinguished.
    pub normals: Vec<Vec<S>>,
    /// +1 eigenspace of S_{n₀}, 8 vectors.
    pub e_plus: Vec<Vec<S>>,
    /// -1 eigenspace, 8 vectors.
    pub e_minus: Vec<Vec<S>>,
    /// 0 eigenspace, 7 vectors.
    pub e_zero: Vec<Vec<S>>,
}

fn gram_residual<S: Scalar>(vecs: &[&Vec<S>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, u) in vecs.iter().enumerate() {
        for (j, v) in vecs.iter().enumerate() {
            let d = dot(u, v);
            let want = if i == j { S::one() } else { S::zero() };
            worst = worst.max(d.sub(&want).abs());
        }
    }
    worst
}

impl<S: Scalar> MinusFrame<S> {
    pub fn all_vectors(&self) -> Vec<&Vec<S>> {
        let mut v: Vec<&Vec<S>> = vec![&self.point];
        v.extend(self.normals.iter());
        v.extend(self.e_plus.iter());
        v.extend(self.e_minus.iter());
        v.extend(self.e_zero.iter());
        v
    }

    /// Max deviation of the 32 frame vectors (point included) from
    /// orthonormality.
    pub fn gram_residual(&self) -> f64 {
        gram_residual(&self.all_vectors())
    }

    pub fn tangents(&self) -> Vec<&Vec<S>> {
        let mut v: Vec<&Vec<S>> = Vec::with_capacity(22);
        v.extend(self.e_plus.iter());
        v.extend(self.e_minus.iter());
        v.extend(self.e_zero.iter());
        v
    }

    /// The mirror point on M₊ with its full adapted frame: with ν = ε₀,
    ///   x = (x* + ν)/√2, n₀ = (x* - ν)/√2,
    /// the M₊ normals are n₀ together with the +1 eigenbasis at x*, the +1
    /// eigenspace at x is spanned by ε₁..ε₈, the -1 eigenspace is the old
    /// 0-eigenspace, and the 0-eigenspace is the old -1 eigenspace.
    pub fn mirror_plus(&self) -> PlusFrame<S> {
        let sqrt2 = S::from_i64(2)
            .sqrt()
            .expect("sqrt(2) representable in the scalar field");
        let half = S::one().div(&sqrt2);
        let nu = &self.normals[0];
        let x: Vec<S> = self
            .point
            .iter()
            .zip(nu)
            .map(|(a, b)| a.add(b).mul(&half))
            .collect();
        let n0: Vec<S> = self
            .point
            .iter()
            .zip(nu)
            .map(|(a, b)| a.sub(b).mul(&half))
            .collect();
        let mut normals = vec![n0];
        normals.extend(self.e_plus.iter().cloned());
        PlusFrame {
            point: x,
            normals,
            e_plus: self.normals[1..].to_vec(),
            e_minus: self.e_zero.clone(),
            e_zero: self.e_minus.clone(),
        }
    }
}

impl<S: Scalar> PlusFrame<S> {
    pub fn all_vectors(&self) -> Vec<&Vec<S>> {
        let mut v: Vec<&Vec<S>> = vec![&self.point];
        v.extend(self.normals.iter());
        v.extend(self.e_plus.iter());
        v.extend(self.e_minus.iter());
        v.extend(self.e_zero.iter());
        v
    }

    pub fn gram_residual(&self) -> f64 {
        gram_residual(&self.all_vectors())
    }

    pub fn tangents(&self) -> Vec<&Vec<S>> {
        let mut v: Vec<&Vec<S>> = Vec::with_capacity(23);
        v.extend(self.e_plus.iter());
        v.extend(self.e_minus.iter());
        v.extend(self.e_zero.iter());
        v
    }
}

/// Samples a point of the Clifford-Stiefel manifold: draw ζ of norm 1/√2,
/// then η of norm 1/√2 in the orthogonal complement of
/// span{ζ, ρ₁(ζ), ..., ρ₇(ζ)} inside R¹⁶ (an 8-dimensional complement).
/// Float mode only; resamples on a degenerate draw.
pub fn sample_clifford_stiefel(family: &FkmFamily, rng: &mut SplitMix64) -> Result<Vec<f64>> {
    for _attempt in 0..100 {
        let zeta_raw: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
        let nz = norm_f64(&zeta_raw);
        if nz < 1e-6 {
            continue;
        }
        let inv = std::f64::consts::FRAC_1_SQRT_2 / nz;
        let zeta: Vec<f64> = zeta_raw.iter().map(|x| x * inv).collect();

        let mut constraints: Vec<Vec<f64>> = vec![zeta.clone()];
        for rho in &family.rep.rho {
            constraints.push(rho.apply(&zeta));
        }
        let cons_on = orthonormalize(&constraints, 1e-9);
        let mut eta: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
        for u in &cons_on {
            let c = -dot(u, &eta);
            axpy(&mut eta, &c, u);
        }
        let ne = norm_f64(&eta);
        if ne < 1e-6 {
            continue;
        }
        let inv = std::f64::consts::FRAC_1_SQRT_2 / ne;
        let eta: Vec<f64> = eta.iter().map(|x| x * inv).collect();

        let mut x = Vec::with_capacity(32);
        x.extend_from_slice(&zeta);
        x.extend_from_slice(&eta);
        if family.membership_residual(&x) < 1e-10 {
            return Ok(x);
        }
    }
    Err(Error::SamplingExhausted(100))
}

/// Builds the adapted frame at a Clifford-Stiefel point: normals ε_a = P_a x*,
/// 0-eigenspace spanned by P_a P₀ x* (a = 1..8), and ±1 eigenspaces as
/// kernels of their defining linear conditions, orthonormalized.
/// Float mode only (exact frames come from the structured base configuration).
pub fn focal_frame_at(family: &FkmFamily, point: &[f64], tol: f64) -> Result<MinusFrame<f64>> {
    let res = family.membership_residual(point);
    if res > 1e-8 {
        return Err(Error::Membership(res));
    }
    let normals: Vec<Vec<f64>> = (0..9).map(|a| family.system.apply(a, point)).collect();
    let p0x = family.system.apply(0, point);
    let e_zero: Vec<Vec<f64>> = (1..9).map(|a| family.system.apply(a, &p0x)).collect();

    // E_± = {X : P₀X = ∓X, X ⊥ x*, X ⊥ ε_a}; the +1 eigenspace of
    // S_{ε₀}(X,Y) = -⟨P₀X, Y⟩ is the P₀ = -1 side.
    let p0m = family.system.p[0].mat::<f64>();
    let build = |sign: f64| -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(32 + 10);
        let cond = if sign > 0.0 {
            p0m.add(&Mat::identity(32))
        } else {
            p0m.sub(&Mat::identity(32))
        };
        for i in 0..32 {
            rows.push(cond.row(i).to_vec());
        }
        rows.push(point.to_vec());
        for n in &normals {
            rows.push(n.clone());
        }
        let m = Mat::from_rows(rows);
        orthonormalize(&crate::mat::kernel_basis(&m, tol), 1e-9)
    };
    let e_plus = build(1.0);
    let e_minus = build(-1.0);
    if e_plus.len() != 7 || e_minus.len() != 7 {
        return Err(Error::dim(
            "focal eigenspaces",
            "7 + 7",
            format!("{} + {}", e_plus.len(), e_minus.len()),
        ));
    }
    let frame = MinusFrame {
        point: point.to_vec(),
        normals,
        e_plus,
        e_minus,
        e_zero,
    };
    let g = frame.gram_residual();
    if g > 1e-8 {
        return Err(Error::Invalid(format!("frame gram residual {g:.3e}")));
    }
    Ok(frame)
}

// ---------------------------------------------------------------------------
// the structured base configuration and its isometry orbit
// ---------------------------------------------------------------------------

fn oct_pair_vec<S: Scalar>(first: &[(usize, i8)], second: &[(usize, i8)], scale: &S) -> Vec<S> {
    // a vector of R¹⁶ = O ⊕ O given as signed basis atoms per octonion slot
    let mut v = vec![S::zero(); 16];
    for &(k, s) in first {
        v[k] = if s < 0 { scale.neg() } else { scale.clone() };
    }
    for &(k, s) in second {
        v[8 + k] = if s < 0 { scale.neg() } else { scale.clone() };
    }
    v
}

fn embed_zeta<S: Scalar>(v: Vec<S>) -> Vec<S> {
    let mut out = v;
    out.extend(std::iter::repeat_with(S::zero).take(16));
    out
}

fn embed_eta<S: Scalar>(v: Vec<S>) -> Vec<S> {
    let mut out = vec![S::zero(); 16];
    out.extend(v);
    out
}

/// The explicitly-constructed base point of M₋ with its adapted frame, over
/// any scalar field containing 1/√2. For the right-multiplication family the
/// point is ζ = (e₀, e₁)/2, η = (e₃, e₂)/2 and the eigenspaces are
///   E₊ = {(0, (e₁β, β)) : β ⊥ e₂},  E₋ = {((e₃(e₂y), y), 0) : y ⊥ e₁};
/// the left-multiplication family uses the mirror-image formulas. Everything
/// is verified on construction (exactly, in exact mode).
pub fn base_minus_frame<S: Scalar>(family: &FkmFamily) -> Result<MinusFrame<S>> {
    let half = S::from_ratio(1, 2);
    let sqrt2 = S::from_i64(2)
        .sqrt()
        .ok_or_else(|| Error::ExactUnsupported("sqrt(2) not representable".into()))?;
    let inv_sqrt2 = S::one().div(&sqrt2);

    let prod = oct_basis_product;

    let side = family.side;
    let eta_atoms: [(usize, i8); 2] = match side {
        Side::Right => [(3, 1), (2, 1)],
        Side::Left => [(3, 1), (2, -1)],
    };
    // X_a has η-slot (u, e_a), E₋'s Y_p has ζ-slot (u, e_p); u per side:
    let plus_atom = |a: usize| -> ((usize, i8), (usize, i8)) {
        match side {
            Side::Right => {
                let (k, s) = prod(1, a);
                ((k, s), (a, 1))
            }
            Side::Left => {
                let (k, s) = prod(a, 1);
                ((k, s), (a, 1))
            }
        }
    };
    let minus_atom = |p: usize| -> ((usize, i8), (usize, i8)) {
        match side {
            Side::Right => {
                let (k1, s1) = prod(2, p);
                let (k2, s2) = prod(3, k1);
                ((k2, s1 * s2), (p, 1))
            }
            Side::Left => {
                let (k1, s1) = prod(p, 2);
                let (k2, s2) = prod(k1, 3);
                ((k2, -(s1 * s2)), (p, 1))
            }
        }
    };

    let zeta = embed_zeta(oct_pair_vec(&[(0, 1)], &[(1, 1)], &half));
    let eta = embed_eta(oct_pair_vec(&[eta_atoms[0]], &[eta_atoms[1]], &half));
    let point: Vec<S> = zeta.iter().zip(&eta).map(|(a, b)| a.add(b)).collect();

    let res = family.membership_residual(&point);
    if res > 1e-14 {
        return Err(Error::Membership(res));
    }

    let normals: Vec<Vec<S>> = (0..9).map(|a| family.system.apply(a, &point)).collect();
    let p0x = family.system.apply(0, &point);
    let e_zero: Vec<Vec<S>> = (1..9).map(|a| family.system.apply(a, &p0x)).collect();

    let mut e_plus = Vec::with_capacity(7);
    for a in [0usize, 1, 3, 4, 5, 6, 7] {
        let (fst, snd) = plus_atom(a);
        e_plus.push(embed_eta(oct_pair_vec(&[fst], &[snd], &inv_sqrt2)));
    }
    let mut e_minus = Vec::with_capacity(7);
    for p in [0usize, 2, 3, 4, 5, 6, 7] {
        let (fst, snd) = minus_atom(p);
        e_minus.push(embed_zeta(oct_pair_vec(&[fst], &[snd], &inv_sqrt2)));
    }

    let frame = MinusFrame {
        point,
        normals,
        e_plus,
        e_minus,
        e_zero,
    };
    let g = frame.gram_residual();
    if g > 1e-14 {
        return Err(Error::Invalid(format!("base frame gram residual {g:.3e}")));
    }
    Ok(frame)
}

/// One Clifford translation Q_c = Σ c_a P_a for a unit coefficient vector c:
/// a symmetric orthogonal involution of R³² preserving both focal manifolds.
pub fn clifford_translation<S: Scalar>(family: &FkmFamily, c: &[S]) -> Mat<S> {
    family.system.combination(c)
}

/// Transports the base configuration along a product of `hops` random
/// Clifford translations. The result is an adapted frame at a pseudo-random
/// point of M₋, exactly orthonormal in exact mode. These configurations
/// carry the canonically aligned bases that the block-structure checks
/// expect; generic orthonormalization does not produce them.
pub fn sample_adapted_minus_frame<S: Scalar>(
    family: &FkmFamily,
    rng: &mut SplitMix64,
    hops: usize,
) -> Result<MinusFrame<S>> {
    let base = base_minus_frame::<S>(family)?;
    let mut g: Option<Mat<S>> = None;
    for _ in 0..hops {
        let c = S::sample_unit(rng, 9);
        let q = clifford_translation(family, &c);
        g = Some(match g {
            None => q,
            Some(prev) => q.matmul(&prev),
        });
    }
    let Some(g) = g else { return Ok(base) };
    let tv = |v: &Vec<S>| g.matvec(v);
    Ok(MinusFrame {
        point: tv(&base.point),
        normals: base.normals.iter().map(tv).collect(),
        e_plus: base.e_plus.iter().map(tv).collect(),
        e_minus: base.e_minus.iter().map(tv).collect(),
        e_zero: base.e_zero.iter().map(tv).collect(),
    })
}

/// A random special-orthogonal matrix assembled from Givens rotations with
/// exactly representable cosine/sine pairs ((1-t²)/(1+t²), 2t/(1+t²)),
/// usable in both float and exact mode.
pub fn random_rotation<S: Scalar>(n: usize, rng: &mut SplitMix64, sweeps: usize) -> Mat<S> {
    let mut q: Mat<S> = Mat::identity(n);
    for _ in 0..sweeps {
        for i in 0..n {
            for j in (i + 1)..n {
                let t = S::sample(rng);
                let t2 = t.mul(&t);
                let den = S::one().add(&t2);
                let c = S::one().sub(&t2).div(&den);
                let s = S::from_i64(2).mul(&t).div(&den);
                for k in 0..n {
                    let a = q[(k, i)].clone();
                    let b = q[(k, j)].clone();
                    q[(k, i)] = a.mul(&c).sub(&b.mul(&s));
                    q[(k, j)] = a.mul(&s).add(&b.mul(&c));
                }
            }
        }
    }
    q
}

/// Rotates the non-distinguished normals ε₁..ε₈ by `normal_rot` and the
/// eigenbases by the given rotations (None leaves a block untouched).
/// Produces genuinely different tensor data from the same geometric point
/// while keeping the distinguished normal fixed.
pub fn rotate_minus_frame<S: Scalar>(
    frame: &MinusFrame<S>,
    normal_rot: Option<&Mat<S>>,
    plus_rot: Option<&Mat<S>>,
    minus_rot: Option<&Mat<S>>,
    zero_rot: Option<&Mat<S>>,
) -> MinusFrame<S> {
    let rotate = |vs: &[Vec<S>], r: Option<&Mat<S>>| -> Vec<Vec<S>> {
        match r {
            None => vs.to_vec(),
            Some(r) => {
                assert_eq!(r.rows, vs.len());
                (0..r.cols)
                    .map(|j| {
                        let mut out = vec![S::zero(); vs[0].len()];
                        for (i, v) in vs.iter().enumerate() {
                            axpy(&mut out, &r[(i, j)], v);
                        }
                        out
                    })
                    .collect()
            }
        }
    };
    let mut normals = vec![frame.normals[0].clone()];
    normals.extend(rotate(&frame.normals[1..], normal_rot));
    MinusFrame {
        point: frame.point.clone(),
        normals,
        e_plus: rotate(&frame.e_plus, plus_rot),
        e_minus: rotate(&frame.e_minus, minus_rot),
        e_zero: rotate(&frame.e_zero, zero_rot),
    }
}

/// Joint kernel dimension of a list of matrices.
pub fn joint_kernel_dim<S: Scalar>(ms: &[Mat<S>], tol: f64) -> Result<usize> {
    Ok(joint_kernel(ms, tol)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn base_point_is_exactly_on_m_minus() {
        for side in [Side::Right, Side::Left] {
            let family = FkmFamily::new(side).unwrap();
            let frame = base_minus_frame::<Exact>(&family).unwrap();
            assert_eq!(family.membership_residual(&frame.point), 0.0);
            assert_eq!(frame.gram_residual(), 0.0);
            // sign convention: F = -1 on the Clifford-Stiefel manifold
            assert_eq!(family.eval_f(&frame.point), Exact::from_i64(-1));
        }
    }

    #[test]
    fn printed_base_point_variant_fails_membership() {
        // replacing the η = (e₃,e₂)/2 component with (e₃,e₄)/2 violates the
        // i = 3 membership condition: ⟨ρ₃ζ, η⟩ = 1/4, so ⟨P₄x, x⟩ = -1/2
        let family = FkmFamily::new(Side::Right).unwrap();
        let frame = base_minus_frame::<Exact>(&family).unwrap();
        let mut bad = frame.point.clone();
        bad[16 + 8 + 2] = Exact::zero();
        bad[16 + 8 + 4] = Exact::from_ratio(1, 2);
        let res = family.membership_residual(&bad);
        assert!((res - 0.5).abs() < 1e-15, "residual {res}");
    }

    #[test]
    fn cartan_munzner_exact_zero_and_float_small() {
        for side in [Side::Right, Side::Left] {
            let family = FkmFamily::new(side).unwrap();
            let mut rng = SplitMix64::new(1);
            let (r1, r2) = verify_cartan_munzner::<Exact>(&family, 20, &mut rng);
            assert_eq!((r1, r2), (0.0, 0.0));
            let mut rng = SplitMix64::new(2);
            let (r1, r2) = verify_cartan_munzner::<f64>(&family, 200, &mut rng);
            assert!(r1 < 1e-9 && r2 < 1e-9, "residuals {r1:.3e} {r2:.3e}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let mut rng = SplitMix64::new(3);
        let x: Vec<f64> = (0..32).map(|_| rng.normal()).collect();
        let g = family.grad_f(&x);
        let h = 1e-5;
        for k in [0usize, 7, 16, 31] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (family.eval_f(&xp) - family.eval_f(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5, "coord {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn homogeneity_and_origin() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let zero = vec![0.0f64; 32];
        assert_eq!(family.eval_f(&zero), 0.0);
        assert!(family.grad_f(&zero).iter().all(|g| *g == 0.0));
        let mut rng = SplitMix64::new(4);
        let x: Vec<f64> = (0..32).map(|_| rng.normal()).collect();
        let lam = 1.7f64;
        let xs: Vec<f64> = x.iter().map(|v| v * lam).collect();
        let want = lam.powi(4) * family.eval_f(&x);
        assert!((family.eval_f(&xs) - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn plain_quartic_fails_laplace_control() {
        let mut rng = SplitMix64::new(5);
        let x: Vec<f64> = (0..32).map(|_| rng.normal()).collect();
        assert!(plain_quartic_laplace_defect(&x) > 1.0);
    }

    #[test]
    fn sampled_points_pass_membership_and_convention() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let mut rng = SplitMix64::new(6);
        for _ in 0..10 {
            let x = sample_clifford_stiefel(&family, &mut rng).unwrap();
            assert!(family.membership_residual(&x) < 1e-10);
            assert!((family.eval_f(&x) + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eta_equal_zeta_fails_membership() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let mut x = vec![0.0f64; 32];
        x[0] = std::f64::consts::FRAC_1_SQRT_2;
        x[16] = std::f64::consts::FRAC_1_SQRT_2; // η = ζ violates ζ ⊥ η
        assert!(family.membership_residual(&x) > 0.1);
    }

    #[test]
    fn focal_frame_at_sampled_point() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let mut rng = SplitMix64::new(7);
        let x = sample_clifford_stiefel(&family, &mut rng).unwrap();
        let frame = focal_frame_at(&family, &x, 1e-9).unwrap();
        assert_eq!(frame.e_plus.len(), 7);
        assert_eq!(frame.e_minus.len(), 7);
        assert_eq!(frame.e_zero.len(), 8);
        assert!(frame.gram_residual() < 1e-12);
    }

    #[test]
    fn mirror_plus_frame_is_orthonormal_and_on_m_plus() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let frame = base_minus_frame::<Exact>(&family).unwrap();
        let plus = frame.mirror_plus();
        assert_eq!(plus.gram_residual(), 0.0);
        assert_eq!(family.eval_f(&plus.point), Exact::from_i64(1));
        assert_eq!(plus.e_plus.len(), 8);
        assert_eq!(plus.e_zero.len(), 7);
    }

    #[test]
    fn adapted_transport_preserves_structure_exactly() {
        let family = FkmFamily::new(Side::Right).unwrap();
        let mut rng = SplitMix64::new(8);
        let frame = sample_adapted_minus_frame::<Exact>(&family, &mut rng, 3).unwrap();
        assert_eq!(family.membership_residual(&frame.point), 0.0);
        assert_eq!(frame.gram_residual(), 0.0);
        assert_eq!(family.eval_f(&frame.point), Exact::from_i64(-1));
        let base = base_minus_frame::<Exact>(&family).unwrap();
        assert_ne!(base.point, frame.point);
    }

    #[test]
    fn random_rotation_is_orthogonal_in_both_modes() {
        let mut rng = SplitMix64::new(9);
        let q = random_rotation::<Exact>(5, &mut rng, 1);
        assert_eq!(q.transpose().matmul(&q), Mat::<Exact>::identity(5));
        let qf = random_rotation::<f64>(8, &mut rng, 1);
        let res = qf.transpose().matmul(&qf).sub(&Mat::identity(8)).max_abs();
        assert!(res < 1e-12);
    }
}
