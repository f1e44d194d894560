//! Mirror-point data conversions and block-pattern validators.
//!
//! For (x, n₀) on the unit normal bundle of M₊, the companion points are
//! (x♯, n₀♯) = (n₀, x) on M₊ and (x*, n*) = ((x+n₀)/√2, (x-n₀)/√2) on M₋.
//! The shape-operator data at the three points are interlocked: the ♯ data is
//! a pure reindexing of the tensor together with its cross slices, and the *
//! data is the same reindexing with ±√2 factors. Applying ♯ twice is the
//! identity on the nose.

use crate::error::{Error, Result};
use crate::forms::SecondFormTensor;
use crate::geometry::PlusFrame;
use crate::mat::{joint_kernel, Mat};
use crate::scalar::Scalar;

/// The adapted frame of the mirror point x♯ = n₀: the ± eigenspaces are
/// shared with x, the old 0-eigenspace becomes the unit normal sphere
/// directions, and the old normals n₁..n₇ span the new 0-eigenspace.
pub fn sharp_frame<S: Scalar>(f: &PlusFrame<S>) -> PlusFrame<S> {
    let mut normals = vec![f.point.clone()];
    normals.extend(f.e_zero.iter().cloned());
    PlusFrame {
        point: f.normals[0].clone(),
        normals,
        e_plus: f.e_plus.clone(),
        e_minus: f.e_minus.clone(),
        e_zero: f.normals[1..].to_vec(),
    }
}

/// Transports an M₊ tensor (with cross slices) to the mirror point x♯:
///   A♯_p = cross_p,  B♯_p[α][a] = B_a[α][p],  C♯_p[μ][a] = -C_a[μ][p],
/// and the new cross slices are the old A-blocks. An exact involution.
pub fn transport_sharp<S: Scalar>(t: &SecondFormTensor<S>) -> Result<SecondFormTensor<S>> {
    let cross = t
        .cross
        .as_ref()
        .ok_or_else(|| Error::Invalid("sharp transport needs cross slices".into()))?;
    let (dp, dm, d0) = t.dims;
    let m = t.m();
    let n = dp + dm + m; // new tangent dimension (E₀♯ has dimension m)
    if cross.len() != d0 {
        return Err(Error::dim("cross slices", d0, cross.len()));
    }
    let mut ops = Vec::with_capacity(d0 + 1);
    let mut s0 = Mat::<S>::zeros(n, n);
    for i in 0..dp {
        s0[(i, i)] = S::one();
    }
    for i in 0..dm {
        s0[(dp + i, dp + i)] = S::one().neg();
    }
    ops.push(s0);
    for p in 0..d0 {
        let mut s = Mat::<S>::zeros(n, n);
        s.set_block(0, dp, &cross[p]);
        s.set_block(dp, 0, &cross[p].transpose());
        let bp = Mat::from_fn(dp, m, |al, a| t.b(a + 1)[(al, p)].clone());
        let cp = Mat::from_fn(dm, m, |mu, a| t.c(a + 1)[(mu, p)].neg());
        s.set_block(0, dp + dm, &bp);
        s.set_block(dp + dm, 0, &bp.transpose());
        s.set_block(dp, dp + dm, &cp);
        s.set_block(dp + dm, dp, &cp.transpose());
        ops.push(s);
    }
    let new_cross: Vec<Mat<S>> = (1..=m).map(|a| t.a(a)).collect();
    Ok(SecondFormTensor {
        dims: (dp, dm, m),
        ops,
        cross: Some(new_cross),
    })
}

/// Transports an M₊ tensor to the mirror point x* on M₋:
///   A*_α[a][p] = -√2 B_a[α][p],
///   B*_α[a][μ] = -(1/√2) A_a[α][μ],
///   C*_α[p][μ] = -(1/√2) cross_p[α][μ],
/// giving the 9-operator M₋ tensor with dims (m, d0, dm).
pub fn transport_star<S: Scalar>(t: &SecondFormTensor<S>) -> Result<SecondFormTensor<S>> {
    let cross = t
        .cross
        .as_ref()
        .ok_or_else(|| Error::Invalid("star transport needs cross slices".into()))?;
    let (dp, dm, d0) = t.dims;
    let m = t.m();
    let sqrt2 = S::from_i64(2)
        .sqrt()
        .ok_or_else(|| Error::ExactUnsupported("sqrt(2) not representable".into()))?;
    let inv = S::one().div(&sqrt2).neg();
    let neg_sqrt2 = sqrt2.neg();
    // dims at x*: E₊* = span{n_a} (m), E₋* = E₀ (d0), E₀* = E₋ (dm)
    let n = m + d0 + dm;
    let mut ops = Vec::with_capacity(dp + 1);
    let mut s0 = Mat::<S>::zeros(n, n);
    for i in 0..m {
        s0[(i, i)] = S::one();
    }
    for i in 0..d0 {
        s0[(m + i, m + i)] = S::one().neg();
    }
    ops.push(s0);
    for al in 0..dp {
        let mut s = Mat::<S>::zeros(n, n);
        let astar = Mat::from_fn(m, d0, |a, p| t.b(a + 1)[(al, p)].mul(&neg_sqrt2));
        let bstar = Mat::from_fn(m, dm, |a, mu| t.a(a + 1)[(al, mu)].mul(&inv));
        let cstar = Mat::from_fn(d0, dm, |p, mu| cross[p][(al, mu)].mul(&inv));
        s.set_block(0, m, &astar);
        s.set_block(m, 0, &astar.transpose());
        s.set_block(0, m + d0, &bstar);
        s.set_block(m + d0, 0, &bstar.transpose());
        s.set_block(m, m + d0, &cstar);
        s.set_block(m + d0, m, &cstar.transpose());
        ops.push(s);
    }
    Ok(SecondFormTensor {
        dims: (m, d0, dm),
        ops,
        cross: None,
    })
}

// ---------------------------------------------------------------------------
// block patterns
// ---------------------------------------------------------------------------

/// A named template of required-zero blocks over the (A, B, C) views of a
/// tensor, with per-operator splits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PatternKind {
    /// M₋ data at x*, 4-null adapted frames: for α ≤ 4 only the lower-right
    /// 4x4 of A*_α and the diagonal blocks of B*_α, C*_α survive; for α ≥ 5
    /// the upper-left blocks vanish.
    GoodStar,
    /// M₊ data in the adapted layout: for a ≤ 3 only diag(z_a, w_a) and the
    /// lower-right c_a, f_a survive; for a ≥ 4 the upper-left blocks vanish;
    /// additionally the distinguished kernel column of every B_a and C_a
    /// vanishes.
    Mtx,
}

/// Checks all required-zero blocks of the pattern; returns the largest
/// offending entry (so `pass = residual <= tol`).
pub fn validate_pattern<S: Scalar>(
    t: &SecondFormTensor<S>,
    kind: PatternKind,
    tol: f64,
) -> Result<(bool, f64)> {
    let mut worst = 0.0f64;
    match kind {
        PatternKind::GoodStar => {
            if t.dims != (7, 7, 8) || t.m() != 8 {
                return Err(Error::dim("good pattern", "(7,7,8) x 8", format!("{:?}", t.dims)));
            }
            for al in 1..=8usize {
                let a = t.a(al);
                let b = t.b(al);
                let c = t.c(al);
                if al <= 4 {
                    // A*: everything except the lower-right 3x4... blocks:
                    // rows split 3+4 (V₊* last? the adapted layout puts the
                    // distinguished triple first), columns split 3+4
                    worst = worst.max(a.block(0, 0, 3, 3).max_abs());
                    worst = worst.max(a.block(0, 3, 3, 4).max_abs());
                    worst = worst.max(a.block(3, 0, 4, 3).max_abs());
                    // B*, C*: off-diagonal blocks vanish (rows 3+4, cols 4+4)
                    worst = worst.max(b.block(0, 4, 3, 4).max_abs());
                    worst = worst.max(b.block(3, 0, 4, 4).max_abs());
                    worst = worst.max(c.block(0, 4, 3, 4).max_abs());
                    worst = worst.max(c.block(3, 0, 4, 4).max_abs());
                } else {
                    worst = worst.max(a.block(0, 0, 3, 3).max_abs());
                    worst = worst.max(b.block(0, 0, 3, 4).max_abs());
                    worst = worst.max(c.block(0, 0, 3, 4).max_abs());
                }
            }
        }
        PatternKind::Mtx => {
            if t.dims != (8, 8, 7) || t.m() != 7 {
                return Err(Error::dim("mtx pattern", "(8,8,7) x 7", format!("{:?}", t.dims)));
            }
            for a in 1..=7usize {
                let am = t.a(a);
                let b = t.b(a);
                let c = t.c(a);
                if a <= 3 {
                    worst = worst.max(am.block(0, 4, 4, 4).max_abs());
                    worst = worst.max(am.block(4, 0, 4, 4).max_abs());
                    worst = worst.max(b.block(0, 0, 4, 7).max_abs());
                    worst = worst.max(b.block(4, 0, 4, 3).max_abs());
                    worst = worst.max(c.block(0, 0, 4, 7).max_abs());
                    worst = worst.max(c.block(4, 0, 4, 3).max_abs());
                } else {
                    worst = worst.max(am.block(0, 0, 4, 4).max_abs());
                    worst = worst.max(b.block(0, 0, 4, 3).max_abs());
                    worst = worst.max(c.block(0, 0, 4, 3).max_abs());
                }
                // the common kernel column (third of the first block)
                worst = worst.max(b.block(0, 2, 8, 1).max_abs());
                worst = worst.max(c.block(0, 2, 8, 1).max_abs());
            }
        }
    }
    Ok((worst <= tol, worst))
}

// ---------------------------------------------------------------------------
// adaptation of an M₊ tensor into the layout the patterns expect
// ---------------------------------------------------------------------------

/// An M₊ tensor rearranged so the distinguished subspaces sit in the leading
/// positions: E₊ rows = (ker B₁ᵀ | range), E₋ rows = (ker C₁ᵀ | range),
/// E₀ columns = (ker B₁ with the all-operator kernel third | σ columns), and
/// normals = (the vanishing triple | the rest).
pub struct MtxAdapted {
    pub tensor: SecondFormTensor<f64>,
    /// permutation applied to the normal indices 1..=7 (new -> old)
    pub normal_order: Vec<usize>,
}

fn permutation_matrix(order: &[usize]) -> Mat<f64> {
    // column j of the result is e_{order[j]}: new basis vector j = old order[j]
    let n = order.len();
    let mut m = Mat::<f64>::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        m[(i, j)] = 1.0;
    }
    m
}

/// Rearranges an adapted-frame FKM tensor into the canonical mtx layout by
/// pure index permutations, validating each structural choice. Fails when the
/// configuration is not in the finitely-many-permutations reach of the
/// layout (generic non-adapted frames need the full normalization instead).
pub fn mtx_adapt(t: &SecondFormTensor<f64>, tol: f64) -> Result<MtxAdapted> {
    let (dp, dm, d0) = t.dims;
    if (dp, dm, d0) != (8, 8, 7) || t.m() != 7 {
        return Err(Error::dim("mtx_adapt", "(8,8,7) x 7", format!("{:?}", t.dims)));
    }
    let b1 = t.b(1);
    let c1 = t.c(1);
    let scale = b1.max_abs().max(1e-12);
    let zero = |x: f64| x <= tol * scale.max(1.0);

    // E₀ order: columns annihilated by B₁ first, with the joint kernel of all
    // B_a placed third; σ-columns after.
    let bs: Vec<Mat<f64>> = (1..=7).map(|a| t.b(a)).collect();
    let common = joint_kernel(&bs, tol)?;
    if common.len() != 1 {
        return Err(Error::dim("common kernel", 1, common.len()));
    }
    let common_col = common[0]
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if common[0]
        .iter()
        .enumerate()
        .any(|(i, v)| i != common_col && v.abs() > 1e-6)
    {
        return Err(Error::Pattern(
            "common kernel not aligned with a coordinate column".into(),
        ));
    }
    let mut kernel_cols: Vec<usize> = (0..d0)
        .filter(|&j| (0..dp).all(|i| zero(b1[(i, j)])) && j != common_col)
        .collect();
    if kernel_cols.len() != 2 {
        return Err(Error::Pattern(format!(
            "expected 2 non-common kernel columns of B1, found {}",
            kernel_cols.len()
        )));
    }
    let mut zero_order = kernel_cols.split_off(0);
    zero_order.push(common_col);
    let sigma_cols: Vec<usize> = (0..d0).filter(|j| !zero_order.contains(j)).collect();
    zero_order.extend(sigma_cols);

    // E₊ order: rows of B₁ that vanish first; E₋ likewise from C₁.
    let mut plus_order: Vec<usize> = (0..dp)
        .filter(|&i| (0..d0).all(|j| zero(b1[(i, j)])))
        .collect();
    if plus_order.len() != 4 {
        return Err(Error::Pattern(format!(
            "expected 4 zero rows of B1, found {}",
            plus_order.len()
        )));
    }
    let rest: Vec<usize> = (0..dp).filter(|i| !plus_order.contains(i)).collect();
    plus_order.extend(rest);
    let mut minus_order: Vec<usize> = (0..dm)
        .filter(|&i| (0..d0).all(|j| zero(c1[(i, j)])))
        .collect();
    if minus_order.len() != 4 {
        return Err(Error::Pattern(format!(
            "expected 4 zero rows of C1, found {}",
            minus_order.len()
        )));
    }
    let rest: Vec<usize> = (0..dm).filter(|i| !minus_order.contains(i)).collect();
    minus_order.extend(rest);

    // normal order: the triple whose B-blocks vanish on the leading 4 rows
    let zero_rows: Vec<usize> = plus_order[..4].to_vec();
    let mut triple: Vec<usize> = (1..=7)
        .filter(|&a| {
            let b = t.b(a);
            zero_rows
                .iter()
                .all(|&i| (0..d0).all(|j| zero(b[(i, j)])))
        })
        .collect();
    if triple.len() != 3 {
        return Err(Error::Pattern(format!(
            "expected a vanishing normal triple, found {} members",
            triple.len()
        )));
    }
    // the pair element n₁ goes first if it is part of the triple
    triple.sort();
    let mut normal_order = triple.clone();
    let rest: Vec<usize> = (1..=7).filter(|a| !normal_order.contains(a)).collect();
    normal_order.extend(rest);

    // conjugate by the block permutation and reorder the operators
    let n = dp + dm + d0;
    let mut big = Mat::<f64>::zeros(n, n);
    big.set_block(0, 0, &permutation_matrix(&plus_order));
    big.set_block(dp, dp, &permutation_matrix(&minus_order));
    big.set_block(dp + dm, dp + dm, &permutation_matrix(&zero_order));
    let mut ops = Vec::with_capacity(8);
    ops.push(big.transpose().matmul(&t.ops[0]).matmul(&big));
    for &a in &normal_order {
        ops.push(big.transpose().matmul(&t.ops[a]).matmul(&big));
    }
    let cross = t.cross.as_ref().map(|cs| {
        let qz = permutation_matrix(&zero_order);
        let qp = permutation_matrix(&plus_order);
        let qm = permutation_matrix(&minus_order);
        (0..d0)
            .map(|p_new| {
                let p_old = zero_order[p_new];
                qp.transpose().matmul(&cs[p_old]).matmul(&qm)
            })
            .collect()
    });
    Ok(MtxAdapted {
        tensor: SecondFormTensor {
            dims: t.dims,
            ops,
            cross,
        },
        normal_order,
    })
}

/// The named blocks of an mtx-layout tensor.
pub struct MtxBlocks {
    /// z_a, w_a: the two diagonal 4x4 blocks of A_a, a = 1..3
    pub z: Vec<Mat<f64>>,
    pub w: Vec<Mat<f64>>,
    /// c_a, f_a: lower-right 4x4 of B_a, C_a, a = 1..7
    pub c: Vec<Mat<f64>>,
    pub f: Vec<Mat<f64>>,
    /// d_a, g_a: upper-right 4x4 of B_a, C_a, a = 4..7
    pub d: Vec<Mat<f64>>,
    pub g: Vec<Mat<f64>>,
    /// b_a, e_a: lower-left 4x3 of B_a, C_a, a = 4..7
    pub b: Vec<Mat<f64>>,
    pub e: Vec<Mat<f64>>,
    /// β_a, γ_a, δ_a: off-diagonal and lower diagonal blocks of A_a, a = 4..7
    pub beta: Vec<Mat<f64>>,
    pub gamma: Vec<Mat<f64>>,
    pub delta: Vec<Mat<f64>>,
}

pub fn mtx_blocks(t: &SecondFormTensor<f64>) -> MtxBlocks {
    let grab = |range: std::ops::RangeInclusive<usize>,
                f: &dyn Fn(usize) -> Mat<f64>|
     -> Vec<Mat<f64>> { range.map(f).collect() };
    MtxBlocks {
        z: grab(1..=3, &|a| t.a(a).block(0, 0, 4, 4)),
        w: grab(1..=3, &|a| t.a(a).block(4, 4, 4, 4)),
        c: grab(1..=7, &|a| t.b(a).block(4, 3, 4, 4)),
        f: grab(1..=7, &|a| t.c(a).block(4, 3, 4, 4)),
        d: grab(4..=7, &|a| t.b(a).block(0, 3, 4, 4)),
        g: grab(4..=7, &|a| t.c(a).block(0, 3, 4, 4)),
        b: grab(4..=7, &|a| t.b(a).block(4, 0, 4, 3)),
        e: grab(4..=7, &|a| t.c(a).block(4, 0, 4, 3)),
        beta: grab(4..=7, &|a| t.a(a).block(0, 4, 4, 4)),
        gamma: grab(4..=7, &|a| t.a(a).block(4, 0, 4, 4)),
        delta: grab(4..=7, &|a| t.a(a).block(4, 4, 4, 4)),
    }
}

// ---------------------------------------------------------------------------
// the b-block template
// ---------------------------------------------------------------------------

/// Result of matching the four 4x3 b-blocks against the canonical layout
/// (entries from {±s, a, ±b, 0} with zero third columns, first columns
/// forming s times a signed permutation).
#[derive(Clone, Debug)]
pub struct EqqqFit {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    /// generator alignment: aligned slot i came from input generator
    /// `gen_order[i]` with sign `gen_sign[i]`.
    pub gen_order: Vec<usize>,
    pub gen_sign: Vec<f64>,
}

/// Matches the b-blocks to the canonical template up to a signed permutation
/// of generators, using the first columns for the alignment: they must form
/// s·(signed permutation); the aligned second columns must decompose as
/// a·I + skew with two 2x2 rotation blocks of weight ±b.
pub fn eqqq_validate(bblocks: &[Mat<f64>], tol: f64) -> Result<EqqqFit> {
    if bblocks.len() != 4 || bblocks.iter().any(|m| m.rows != 4 || m.cols != 3) {
        return Err(Error::dim("eqqq blocks", "four 4x3", "other"));
    }
    let mut residual = 0.0f64;
    for b in bblocks {
        residual = residual.max(b.block(0, 2, 4, 1).max_abs());
    }
    // first columns: s · signed permutation
    let m1 = Mat::from_fn(4, 4, |r, g| bblocks[g][(r, 0)]);
    let mut gen_order = vec![usize::MAX; 4];
    let mut gen_sign = vec![0.0f64; 4];
    let mut s = 0.0f64;
    for g in 0..4 {
        let col: Vec<f64> = (0..4).map(|r| m1[(r, g)]).collect();
        let (imax, vmax) = col
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .map(|(i, v)| (i, *v))
            .unwrap();
        for (i, v) in col.iter().enumerate() {
            if i != imax {
                residual = residual.max(v.abs());
            }
        }
        if gen_order[imax] != usize::MAX {
            return Err(Error::Pattern("first columns not a permutation".into()));
        }
        gen_order[imax] = g;
        gen_sign[imax] = vmax.signum();
        s += vmax.abs() / 4.0;
    }
    for g in 0..4 {
        let col: Vec<f64> = (0..4).map(|r| m1[(r, g)]).collect();
        for v in col {
            if v.abs() > residual.max(tol) {
                residual = residual.max((v.abs() - s).abs());
            }
        }
    }
    // aligned second columns: M2 = a·I + K with K skew, two paired rotations
    let aligned: Vec<Mat<f64>> = (0..4)
        .map(|slot| bblocks[gen_order[slot]].scale(&gen_sign[slot]))
        .collect();
    let m2 = Mat::from_fn(4, 4, |r, slot| aligned[slot][(r, 1)]);
    let a = (0..4).map(|i| m2[(i, i)]).sum::<f64>() / 4.0;
    for i in 0..4 {
        residual = residual.max((m2[(i, i)] - a).abs());
    }
    let k = m2.sub(&Mat::identity(4).scale(&a));
    residual = residual.max(k.skew_residual());
    // |K| entries: one ±b per column, forming a perfect matching
    let mut b_val = 0.0f64;
    let mut partner = vec![usize::MAX; 4];
    for j in 0..4 {
        let col: Vec<f64> = (0..4).map(|r| k[(r, j)]).collect();
        let (imax, vmax) = col
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .map(|(i, v)| (i, *v))
            .unwrap();
        for (i, v) in col.iter().enumerate() {
            if i != imax && i != j {
                residual = residual.max(v.abs());
            }
        }
        partner[j] = imax;
        b_val += vmax.abs() / 4.0;
    }
    for j in 0..4 {
        if partner[j] == j || partner[partner[j]] != j {
            return Err(Error::Pattern("skew part is not a pairing".into()));
        }
        residual = residual.max((k[(partner[j], j)].abs() - b_val).abs());
    }
    Ok(EqqqFit {
        s,
        a,
        b: b_val,
        residual,
        gen_order,
        gen_sign,
    })
}

// ---------------------------------------------------------------------------
// frame symmetries
// ---------------------------------------------------------------------------

/// Residuals of the algebraic Clifford-frame conditions in the mtx layout:
/// after identifying E₋ with E₊ by the documented row-swap map Q (and a sign
/// flip of the trailing rows for the A-side), B_a = C_a and every A_a is
/// skew-symmetric.
#[derive(Clone, Debug)]
pub struct FrameSymmetry {
    pub b_equals_c: f64,
    pub a_skew: f64,
    pub z_skew: f64,
}

/// Applies the row-swap identification and measures the residuals. The map Q
/// swaps the first two leading rows with the last two leading rows on the
/// C-side (aligning g(x) with d(x)); the A-side sign flip negates the
/// trailing four rows and columns.
pub fn validate_frame_symmetries(t: &SecondFormTensor<f64>, tol: f64) -> Result<FrameSymmetry> {
    let (ok, worst) = validate_pattern(t, PatternKind::Mtx, tol.max(1e-8))?;
    if !ok {
        return Err(Error::Pattern(format!(
            "tensor not in mtx layout (offense {worst:.3e})"
        )));
    }
    let blocks = mtx_blocks(t);

    // bring d(x) to rows 1-2 and g(x) to rows 3-4 if needed: detect which
    // pair of rows of d vanishes
    let d_low: f64 = blocks.d.iter().map(|m| m.block(2, 0, 2, 4).max_abs()).fold(0.0, f64::max);
    let d_high: f64 = blocks.d.iter().map(|m| m.block(0, 0, 2, 4).max_abs()).fold(0.0, f64::max);
    let d_rows_leading = d_low <= d_high;

    // orthogonal 2x2 factors aligning d and g rows: fit U from the nonzero
    // d rows against the canonical quadratic pattern is not needed for the
    // B = C check; the swap map alone must match them.
    let mut q_rows: Vec<usize> = (0..8).collect();
    if d_rows_leading {
        // g must live on rows 3-4; Q swaps (0,1) <-> (2,3)
        q_rows[0] = 2;
        q_rows[1] = 3;
        q_rows[2] = 0;
        q_rows[3] = 1;
    } else {
        q_rows[0] = 2;
        q_rows[1] = 3;
        q_rows[2] = 0;
        q_rows[3] = 1;
    }

    let mut b_equals_c = 0.0f64;
    for a in 1..=7 {
        let b = t.b(a);
        let c = t.c(a);
        let cq = Mat::from_fn(8, 7, |i, j| c[(q_rows[i], j)]);
        b_equals_c = b_equals_c.max(b.sub(&cq).max_abs());
    }

    // A-side: A'_a[i][j] = ±A_a[i][ q(j) ] with the trailing-sign flip;
    // skewness of A'_a for all a
    let mut a_skew = 0.0f64;
    for a in 1..=7 {
        let am = t.a(a);
        let aq = Mat::from_fn(8, 8, |i, j| {
            let sign = if j >= 4 { -1.0 } else { 1.0 };
            sign * am[(i, q_rows[j])]
        });
        a_skew = a_skew.max(aq.skew_residual());
    }

    let z_skew = blocks.z.iter().map(|z| z.skew_residual()).fold(0.0, f64::max);
    Ok(FrameSymmetry {
        b_equals_c,
        a_skew,
        z_skew,
    })
}

// ---------------------------------------------------------------------------
// signed-permutation template matching
// ---------------------------------------------------------------------------

/// A simultaneous signed-permutation match of a family of matrices against
/// templates: computed[k] ≈ scale · R · templates[k] · Cᵀ with one signed row
/// permutation R and one signed column permutation C shared by the family.
#[derive(Clone, Debug)]
pub struct TemplateMatch {
    pub scale: f64,
    pub row_perm: Vec<usize>,
    pub row_sign: Vec<f64>,
    pub col_perm: Vec<usize>,
    pub col_sign: Vec<f64>,
    pub residual: f64,
}

fn sorted_abs_profile(vals: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = vals.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn profiles_match(a: &[f64], b: &[f64], scale: f64, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - scale * y).abs() <= tol * (1.0 + scale))
}

/// Finds the simultaneous signed permutation aligning `computed` with
/// `templates` after fitting one global scale. Small dimensions only; the
/// search backtracks over rows (filtered by sorted-magnitude fingerprints),
/// then resolves columns and signs greedily with verification.
pub fn signed_perm_match(
    computed: &[Mat<f64>],
    templates: &[Mat<f64>],
    tol: f64,
) -> Option<TemplateMatch> {
    let k = computed.len();
    if k == 0 || k != templates.len() {
        return None;
    }
    let rows = computed[0].rows;
    let cols = computed[0].cols;
    if templates[0].rows != rows || templates[0].cols != cols {
        return None;
    }
    // global scale from total Frobenius mass
    let mass = |ms: &[Mat<f64>]| -> f64 {
        ms.iter()
            .flat_map(|m| m.entries().iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    };
    let tmass = mass(templates);
    if tmass == 0.0 {
        return None;
    }
    let scale = mass(computed) / tmass;

    // fingerprints: concatenated |entries| per row (sorted) across the family
    let row_profile = |ms: &[Mat<f64>], i: usize| -> Vec<f64> {
        let mut v = Vec::with_capacity(k * cols);
        for m in ms {
            v.extend(m.row(i).iter().copied());
        }
        sorted_abs_profile(&v)
    };
    let col_profile = |ms: &[Mat<f64>], j: usize| -> Vec<f64> {
        let mut v = Vec::with_capacity(k * rows);
        for m in ms {
            v.extend(m.col(j));
        }
        sorted_abs_profile(&v)
    };

    let crp: Vec<Vec<f64>> = (0..rows).map(|i| row_profile(computed, i)).collect();
    let trp: Vec<Vec<f64>> = (0..rows).map(|i| row_profile(templates, i)).collect();
    let ccp: Vec<Vec<f64>> = (0..cols).map(|j| col_profile(computed, j)).collect();
    let tcp: Vec<Vec<f64>> = (0..cols).map(|j| col_profile(templates, j)).collect();

    let row_candidates: Vec<Vec<usize>> = (0..rows)
        .map(|i| {
            (0..rows)
                .filter(|&j| profiles_match(&crp[i], &trp[j], scale, tol))
                .collect()
        })
        .collect();
    let col_candidates: Vec<Vec<usize>> = (0..cols)
        .map(|j| {
            (0..cols)
                .filter(|&l| profiles_match(&ccp[j], &tcp[l], scale, tol))
                .collect()
        })
        .collect();

    // enumerate row assignments; for each, try column assignments and solve
    // signs by propagation
    let mut row_used = vec![false; rows];
    let mut row_perm = Vec::new();
    fn search(
        computed: &[Mat<f64>],
        templates: &[Mat<f64>],
        scale: f64,
        tol: f64,
        row_candidates: &[Vec<usize>],
        col_candidates: &[Vec<usize>],
        row_perm: &mut Vec<usize>,
        row_used: &mut Vec<bool>,
        pos: usize,
    ) -> Option<TemplateMatch> {
        let rows = row_candidates.len();
        let cols = col_candidates.len();
        if pos == rows {
            // columns
            let mut col_used = vec![false; cols];
            let mut col_perm = Vec::new();
            if !assign(col_candidates, &mut col_used, &mut col_perm, 0) {
                return None;
            }
            // iterate over all column assignments would be exhaustive; for
            // these templates the fingerprints pin them (up to harmless
            // ties), so resolve signs for the found one and verify.
            solve_signs(computed, templates, scale, tol, row_perm, &col_perm)
        } else {
            for &c in &row_candidates[pos] {
                if !row_used[c] {
                    row_used[c] = true;
                    row_perm.push(c);
                    if let Some(m) = search(
                        computed,
                        templates,
                        scale,
                        tol,
                        row_candidates,
                        col_candidates,
                        row_perm,
                        row_used,
                        pos + 1,
                    ) {
                        return Some(m);
                    }
                    row_perm.pop();
                    row_used[c] = false;
                }
            }
            None
        }
    }

    fn assign(cands: &[Vec<usize>], used: &mut Vec<bool>, out: &mut Vec<usize>, pos: usize) -> bool {
        if pos == cands.len() {
            return true;
        }
        for &c in &cands[pos] {
            if !used[c] {
                used[c] = true;
                out.push(c);
                if assign(cands, used, out, pos + 1) {
                    return true;
                }
                out.pop();
                used[c] = false;
            }
        }
        false
    }

    fn solve_signs(
        computed: &[Mat<f64>],
        templates: &[Mat<f64>],
        scale: f64,
        tol: f64,
        row_perm: &[usize],
        col_perm: &[usize],
    ) -> Option<TemplateMatch> {
        let rows = row_perm.len();
        let cols = col_perm.len();
        // sign graph: computed[k][i][j] = scale * r_i * c_j * T[k][ri][cj]
        let mut row_sign = vec![0.0f64; rows];
        let mut col_sign = vec![0.0f64; cols];
        row_sign[0] = 1.0;
        // propagate until stable
        for _ in 0..rows + cols {
            for (km, m) in computed.iter().enumerate() {
                for i in 0..rows {
                    for j in 0..cols {
                        let t = templates[km][(row_perm[i], col_perm[j])];
                        let c = m[(i, j)];
                        if t.abs() < 10.0 * tol || c.abs() < 10.0 * tol * scale {
                            continue;
                        }
                        let ratio = (c / (scale * t)).signum();
                        if row_sign[i] != 0.0 && col_sign[j] == 0.0 {
                            col_sign[j] = ratio * row_sign[i];
                        } else if col_sign[j] != 0.0 && row_sign[i] == 0.0 {
                            row_sign[i] = ratio * col_sign[j];
                        }
                    }
                }
            }
            if let Some(i) = row_sign.iter().position(|&s| s == 0.0) {
                // disconnected row: fix freely
                row_sign[i] = 1.0;
            } else if let Some(j) = col_sign.iter().position(|&s| s == 0.0) {
                col_sign[j] = 1.0;
            } else {
                break;
            }
        }
        // verify
        let mut worst = 0.0f64;
        for (km, m) in computed.iter().enumerate() {
            for i in 0..rows {
                for j in 0..cols {
                    let want =
                        scale * row_sign[i] * col_sign[j] * templates[km][(row_perm[i], col_perm[j])];
                    worst = worst.max((m[(i, j)] - want).abs());
                }
            }
        }
        if worst <= tol * (1.0 + scale) {
            Some(TemplateMatch {
                scale,
                row_perm: row_perm.to_vec(),
                row_sign,
                col_perm: col_perm.to_vec(),
                col_sign,
                residual: worst,
            })
        } else {
            None
        }
    }

    search(
        computed,
        templates,
        scale,
        tol,
        &row_candidates,
        &col_candidates,
        &mut row_perm,
        &mut row_used,
        0,
    )
}

// ---------------------------------------------------------------------------
// the displayed template family for the base configuration
// ---------------------------------------------------------------------------

/// The seven displayed 8x7 B-matrix templates (rows in four pairs, the first
/// column single and the remaining columns in pairs; entries built from the
/// 2x2 atoms I, J, K, L).
pub fn displayed_b_templates() -> Vec<Mat<f64>> {
    let i2 = [[1.0, 0.0], [0.0, 1.0]];
    let j2 = [[0.0, 1.0], [-1.0, 0.0]];
    let k2 = [[0.0, 1.0], [1.0, 0.0]];
    let l2 = [[1.0, 0.0], [0.0, -1.0]];
    let z2 = [[0.0, 0.0], [0.0, 0.0]];
    // each template: 4 row-pairs x 3 column-pairs (after the zero first col)
    let build = |blocks: [[[[f64; 2]; 2]; 3]; 4]| -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(8, 7);
        for (bp, brow) in blocks.iter().enumerate() {
            for (bq, atom) in brow.iter().enumerate() {
                for r in 0..2 {
                    for c in 0..2 {
                        m[(2 * bp + r, 1 + 2 * bq + c)] = atom[r][c];
                    }
                }
            }
        }
        m
    };
    vec![
        build([[z2, z2, z2], [z2, z2, z2], [i2, z2, z2], [z2, i2, z2]]).transposed_fix(),
        build([[z2, z2, z2], [z2, z2, z2], [j2, z2, z2], [z2, neg(j2), z2]]).transposed_fix(),
        Mat::zeros(8, 7),
        build([[z2, l2, z2], [z2, z2, z2], [z2, z2, z2], [z2, z2, z2]]).with_block(6, 1, &i2),
        build([[z2, k2, z2], [z2, z2, z2], [z2, z2, z2], [z2, z2, z2]]).with_block(6, 1, &neg(j2)),
        build([[z2, z2, i2], [z2, z2, z2], [z2, z2, z2], [z2, z2, z2]]).with_block(4, 1, &neg(l2)),
        build([[z2, z2, j2], [z2, z2, z2], [z2, z2, z2], [z2, z2, z2]]).with_block(4, 1, &neg(k2)),
    ]
}

fn neg(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]]
}

trait TemplateFix {
    fn transposed_fix(self) -> Self;
    fn with_block(self, r: usize, c: usize, atom: &[[f64; 2]; 2]) -> Self;
}

impl TemplateFix for Mat<f64> {
    fn transposed_fix(self) -> Self {
        self
    }
    fn with_block(mut self, r: usize, c: usize, atom: &[[f64; 2]; 2]) -> Self {
        for i in 0..2 {
            for j in 0..2 {
                self[(r + i, c + j)] = atom[i][j];
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{second_form_minus, second_form_plus, verify_ot_identities};
    use crate::geometry::{base_minus_frame, sample_adapted_minus_frame, FkmFamily};
    use crate::octonion::Side;
    use crate::rng::SplitMix64;
    use crate::scalar::Exact;

    fn family() -> FkmFamily {
        FkmFamily::new(Side::Right).unwrap()
    }

    #[test]
    fn sharp_transport_is_an_exact_involution() {
        let fam = family();
        let frame = base_minus_frame::<Exact>(&fam).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let tt = transport_sharp(&transport_sharp(&t).unwrap()).unwrap();
        assert_eq!(t.ops, tt.ops);
        assert_eq!(t.cross, tt.cross);
    }

    #[test]
    fn sharp_transport_agrees_with_direct_computation() {
        let fam = family();
        let mut rng = SplitMix64::new(51);
        let frame = sample_adapted_minus_frame::<f64>(&fam, &mut rng, 2).unwrap();
        let plus_frame = frame.mirror_plus();
        let t = second_form_plus(&fam, &plus_frame);
        let sharp = transport_sharp(&t).unwrap();
        let direct = second_form_plus(&fam, &sharp_frame(&plus_frame));
        let mut worst = 0.0f64;
        for a in 0..8 {
            worst = worst.max(sharp.ops[a].sub(&direct.ops[a]).max_abs());
        }
        assert!(worst < 1e-10, "sharp two-path residual {worst:.3e}");
        let r = verify_ot_identities(&sharp);
        assert!(r.iter().all(|&x| x < 1e-10), "{r:?}");
    }

    #[test]
    fn star_transport_agrees_with_direct_computation() {
        let fam = family();
        let mut rng = SplitMix64::new(52);
        let frame = sample_adapted_minus_frame::<f64>(&fam, &mut rng, 2).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let star = transport_star(&t).unwrap();
        let direct = second_form_minus(&fam, &frame);
        let mut worst = 0.0f64;
        for a in 0..9 {
            worst = worst.max(star.ops[a].sub(&direct.ops[a]).max_abs());
        }
        assert!(worst < 1e-10, "star two-path residual {worst:.3e}");
        // conversion scale sanity: ‖A*_α‖ = √2 ‖(S^a_{αp})‖ row slices
        let astar = star.a(1);
        let slice = Mat::from_fn(7, 7, |a, p| t.b(a + 1)[(0, p)]);
        assert!(
            (astar.max_abs() - 2.0f64.sqrt() * slice.max_abs()).abs() < 1e-12,
            "star scaling"
        );
    }

    #[test]
    fn mirror_points_stay_on_sphere() {
        let fam = family();
        let mut rng = SplitMix64::new(53);
        let frame = sample_adapted_minus_frame::<f64>(&fam, &mut rng, 1).unwrap();
        let plus = frame.mirror_plus();
        let x = &plus.point;
        let n0 = &plus.normals[0];
        let xs: Vec<f64> = x.iter().zip(n0).map(|(a, b)| (a + b) / 2.0f64.sqrt()).collect();
        let ns: Vec<f64> = x.iter().zip(n0).map(|(a, b)| (a - b) / 2.0f64.sqrt()).collect();
        let n2: f64 = xs.iter().map(|v| v * v).sum();
        let d: f64 = xs.iter().zip(&ns).map(|(a, b)| a * b).sum();
        assert!((n2 - 1.0).abs() < 1e-12 && d.abs() < 1e-12);
    }

    #[test]
    fn mtx_and_good_patterns_hold_at_adapted_configs() {
        let fam = family();
        let mut rng = SplitMix64::new(54);
        let frame = sample_adapted_minus_frame::<f64>(&fam, &mut rng, 2).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let adapted = mtx_adapt(&t, 1e-9).unwrap();
        let (ok, worst) = validate_pattern(&adapted.tensor, PatternKind::Mtx, 1e-10).unwrap();
        assert!(ok, "mtx pattern offense {worst:.3e}");

        let star = transport_star(&adapted.tensor).unwrap();
        let (ok, worst) = validate_pattern(&star, PatternKind::GoodStar, 1e-10).unwrap();
        assert!(ok, "good pattern offense {worst:.3e}");
    }

    #[test]
    fn kernel_dimensions_survive_transport() {
        let fam = family();
        let mut rng = SplitMix64::new(55);
        let frame = sample_adapted_minus_frame::<f64>(&fam, &mut rng, 2).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let sharp = transport_sharp(&t).unwrap();
        for tensor in [&t, &sharp] {
            let bs: Vec<Mat<f64>> = (1..=7).map(|a| tensor.b(a)).collect();
            assert_eq!(joint_kernel(&bs, 1e-9).unwrap().len(), 1);
            let bts: Vec<Mat<f64>> = bs.iter().map(|b| b.transpose()).collect();
            assert_eq!(joint_kernel(&bts, 1e-9).unwrap().len(), 2);
        }
    }

    #[test]
    fn eqqq_template_at_base_config() {
        let fam = family();
        let frame = base_minus_frame::<f64>(&fam).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let adapted = mtx_adapt(&t, 1e-9).unwrap();
        let blocks = mtx_blocks(&adapted.tensor);
        let fit = eqqq_validate(&blocks.b, 1e-9).unwrap();
        assert!(fit.residual < 1e-10, "eqqq residual {:.3e}", fit.residual);
        // base configuration has s = 1/√2-scaled entries and b = s, a = 0
        assert!(fit.s > 0.1);
    }

    #[test]
    fn frame_symmetries_at_base_config() {
        let fam = family();
        let frame = base_minus_frame::<f64>(&fam).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let adapted = mtx_adapt(&t, 1e-9).unwrap();
        let sym = validate_frame_symmetries(&adapted.tensor, 1e-9).unwrap();
        assert!(sym.z_skew < 1e-12, "z skewness {:.3e}", sym.z_skew);
        assert!(sym.b_equals_c < 1e-10, "B = C residual {:.3e}", sym.b_equals_c);
        assert!(sym.a_skew < 1e-10, "A skewness {:.3e}", sym.a_skew);
    }

    #[test]
    fn displayed_templates_match_computed_b_blocks() {
        let fam = family();
        let frame = base_minus_frame::<f64>(&fam).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let computed: Vec<Mat<f64>> = (1..=7).map(|a| t.b(a)).collect();
        let templates = displayed_b_templates();
        let m = signed_perm_match(&computed, &templates, 1e-10).expect("templates must match");
        assert!(m.residual < 1e-10, "residual {:.3e}", m.residual);
        assert!(
            (m.scale - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12,
            "scale {}",
            m.scale
        );
        // negative control: perturbed data must not match
        let mut bad = computed.clone();
        bad[0][(5, 4)] += 0.25;
        assert!(signed_perm_match(&bad, &templates, 1e-10).is_none());
    }

    #[test]
    fn synthetic_frame_symmetry_negative_control() {
        let fam = family();
        let frame = base_minus_frame::<f64>(&fam).unwrap();
        let t = second_form_plus(&fam, &frame.mirror_plus());
        let adapted = mtx_adapt(&t, 1e-9).unwrap();
        let mut broken = adapted.tensor.clone();
        // c_1 != f_1: perturb the lower-right block of C_1 only
        let (dp, dm, _) = broken.dims;
        broken.ops[1][(dp + 4, dp + dm + 3)] += 0.2;
        broken.ops[1][(dp + dm + 3, dp + 4)] += 0.2;
        let sym = validate_frame_symmetries(&broken, 1e-6);
        match sym {
            Ok(s) => assert!(s.b_equals_c > 1e-3, "perturbation detected"),
            Err(_) => {} // pattern rejection is also acceptable
        }
    }
}
