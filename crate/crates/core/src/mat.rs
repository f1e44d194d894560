//! Dense field-generic linear algebra at small fixed dimensions.
//!
//! Everything the geometry needs fits in 32x32: exact rank/kernel by Gaussian
//! elimination over the field, float rank/kernel by one-sided Jacobi SVD
//! (which resolves singular values near machine epsilon, unlike the
//! A^T A route), and symmetric eigendecomposition by cyclic Jacobi.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// Row-major dense matrix over a scalar field.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn diag(entries: &[S]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i].clone();
        }
        m
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// Conjugate transpose (plain transpose for real scalars).
    pub fn adjoint(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, k: &S) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul(k)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul conformability {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out: Mat<S> = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)].add(&a.mul(&rhs[(k, j)]));
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, x)| acc.add(&a.mul(x)))
            })
            .collect()
    }

    /// Largest entry magnitude; the scale reference for relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.sub(&self.transpose()).max_abs() <= tol
    }

    /// ‖M + Mᵀ‖_max — the residual used for "is skew-symmetric" checks.
    pub fn skew_residual(&self) -> f64 {
        self.add(&self.transpose()).max_abs()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Mat<S>) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn vstack(blocks: &[&Mat<S>]) -> Self {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        assert!(blocks.iter().all(|b| b.cols == cols));
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Mat::zeros(rows, cols);
        let mut r = 0;
        for b in blocks {
            out.set_block(r, 0, b);
            r += b.rows;
        }
        out
    }

    pub fn hstack(blocks: &[&Mat<S>]) -> Self {
        assert!(!blocks.is_empty());
        let rows = blocks[0].rows;
        assert!(blocks.iter().all(|b| b.rows == rows));
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(rows, cols);
        let mut c = 0;
        for b in blocks {
            out.set_block(0, c, b);
            c += b.cols;
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

/// Hermitian inner product ⟨a, b⟩ = Σ conj(a_i)·b_i (plain dot for reals).
pub fn dot_h<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc.add(&x.conj().mul(y)))
}

pub fn axpy<S: Scalar>(y: &mut [S], alpha: &S, x: &[S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = yi.add(&alpha.mul(xi));
    }
}

pub fn norm_f64<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.abs() * x.abs()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// rank / kernel
// ---------------------------------------------------------------------------

/// Rank of a matrix. Exact fields use Gaussian elimination with exact zero
/// tests; float fields count singular values above `tol · σ_max`.
pub fn rank<S: Scalar>(m: &Mat<S>, tol: f64) -> usize {
    if S::EXACT {
        rref(m.clone()).1.len()
    } else {
        let sv = singular_values(m);
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > tol * smax).count()
    }
}

/// Basis of {v : m·v = 0}. Orthonormal right singular vectors in float mode,
/// echelon (free-variable) vectors in exact mode.
pub fn kernel_basis<S: Scalar>(m: &Mat<S>, tol: f64) -> Vec<Vec<S>> {
    if S::EXACT {
        kernel_exact(m)
    } else {
        let (_, sv, v) = svd(m);
        let smax = sv.first().copied().unwrap_or(0.0);
        let thresh = tol * smax.max(1e-300);
        let mut out = Vec::new();
        for (k, &s) in sv.iter().enumerate() {
            if smax == 0.0 || s <= thresh {
                out.push(v.col(k));
            }
        }
        out
    }
}

/// Basis of the joint kernel ∩ ker(ms[i]), computed by stacking.
pub fn joint_kernel<S: Scalar>(ms: &[Mat<S>], tol: f64) -> Result<Vec<Vec<S>>> {
    if ms.is_empty() {
        return Err(Error::Empty("no matrices"));
    }
    let cols = ms[0].cols;
    if ms.iter().any(|m| m.cols != cols) {
        return Err(Error::dim("joint_kernel", cols, "mixed column counts"));
    }
    let refs: Vec<&Mat<S>> = ms.iter().collect();
    Ok(kernel_basis(&Mat::vstack(&refs), tol))
}

/// Reduced row echelon form; returns (rref, pivot columns).
fn rref<S: Scalar>(mut m: Mat<S>) -> (Mat<S>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        // best pivot by magnitude (any nonzero works in exact mode)
        let mut best = None;
        let mut best_mag = 0.0;
        for i in r..m.rows {
            let mag = m[(i, c)].abs();
            if !m[(i, c)].is_zero() && mag > best_mag {
                best = Some(i);
                best_mag = mag;
            }
        }
        let Some(p) = best else { continue };
        for j in 0..m.cols {
            let tmp = m[(p, j)].clone();
            m[(p, j)] = m[(r, j)].clone();
            m[(r, j)] = tmp;
        }
        let inv = S::one().div(&m[(r, c)]);
        for j in 0..m.cols {
            m[(r, j)] = m[(r, j)].mul(&inv);
        }
        for i in 0..m.rows {
            if i != r && !m[(i, c)].is_zero() {
                let f = m[(i, c)].clone();
                for j in 0..m.cols {
                    let sub = f.mul(&m[(r, j)]);
                    m[(i, j)] = m[(i, j)].sub(&sub);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

fn kernel_exact<S: Scalar>(m: &Mat<S>) -> Vec<Vec<S>> {
    let (r, pivots) = rref(m.clone());
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..m.cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![S::zero(); m.cols];
        v[free] = S::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = r[(row, free)].neg();
        }
        basis.push(v);
    }
    basis
}

// ---------------------------------------------------------------------------
// float SVD (one-sided Jacobi) and symmetric eigendecomposition
// ---------------------------------------------------------------------------

/// Singular values in descending order (f64 and complex via the same
/// one-sided Jacobi sweep on columns).
pub fn singular_values<S: Scalar>(m: &Mat<S>) -> Vec<f64> {
    svd(m).1
}

/// One-sided Jacobi SVD: returns (U, σ descending, V) with m ≈ U Σ Vᴴ.
/// U has orthonormal columns for nonzero σ; V is square unitary.
/// Resolves tiny singular values to near machine epsilon.
pub fn svd<S: Scalar>(m: &Mat<S>) -> (Mat<S>, Vec<f64>, Mat<S>) {
    assert!(!S::EXACT, "svd is a float-mode operation");
    // work on columns of a = m, accumulate v
    let n = m.cols;
    let mut a = m.clone();
    let mut v = Mat::<S>::identity(n);
    let scale = m.max_abs().max(1e-300);
    let eps = 1e-15 * scale * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let ap = a.col(p);
                let aq = a.col(q);
                let app = dot_h(&ap, &ap).abs();
                let aqq = dot_h(&aq, &aq).abs();
                let apq = dot_h(&ap, &aq);
                let apq_mag = apq.abs();
                off = off.max(apq_mag);
                if apq_mag <= eps * 1e-2 {
                    continue;
                }
                // 2x2 Hermitian eigenproblem for [[app, apq],[conj(apq), aqq]];
                // signum(+0.0) = 1.0, which gives the correct 45-degree
                // rotation when app = aqq
                let tau = (aqq - app) / (2.0 * apq_mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let phase = apq.mul(&S::from_f64(1.0 / apq_mag));
                let s_val = phase.mul(&S::from_f64(c * t));
                rotate_cols(&mut a, p, q, c, &s_val);
                rotate_cols(&mut v, p, q, c, &s_val);
            }
        }
        if off <= eps {
            break;
        }
    }
    // singular values = column norms; sort descending
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| norm_f64(&a.col(j))).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = Mat::<S>::zeros(m.rows, n);
    let mut vv = Mat::<S>::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        sv.push(s);
        let col = a.col(j);
        if s > 0.0 {
            let inv = S::from_f64(1.0 / s);
            for i in 0..m.rows {
                u[(i, slot)] = col[i].mul(&inv);
            }
        }
        let vc = v.col(j);
        for i in 0..n {
            vv[(i, slot)] = vc[i].clone();
        }
    }
    (u, sv, vv)
}

/// Apply the column rotation (p, q) <- (c·p - conj(s)·q, s·p + c·q).
fn rotate_cols<S: Scalar>(a: &mut Mat<S>, p: usize, q: usize, c: f64, s: &S) {
    let cs = S::from_f64(c);
    for i in 0..a.rows {
        let x = a[(i, p)].clone();
        let y = a[(i, q)].clone();
        a[(i, p)] = cs.mul(&x).sub(&s.conj().mul(&y));
        a[(i, q)] = s.mul(&x).add(&cs.mul(&y));
    }
}

/// Eigendecomposition of a symmetric f64 matrix by cyclic Jacobi.
/// Returns (eigenvalues descending, Q with matching orthonormal columns).
pub fn eigh(m: &Mat<f64>, tol: f64) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = m.rows;
    let asym = m.sub(&m.transpose()).max_abs();
    let scale = m.max_abs().max(1e-300);
    if m.rows != m.cols || asym > tol.max(1e-12) * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = m.add(&m.transpose()).scale(&0.5);
    let mut q = Mat::<f64>::identity(n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for r in (p + 1)..n {
                off = off.max(a[(p, r)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = a[(p, r)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, r)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, r)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(r, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(r, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkq;
                    q[(k, r)] = s * qkp + c * qkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut qq = Mat::<f64>::zeros(n, n);
    for (slot, &i) in order.iter().enumerate() {
        for k in 0..n {
            qq[(k, slot)] = q[(k, i)];
        }
    }
    Ok((vals, qq))
}

/// Gram-Schmidt orthonormalization (float mode); drops dependent vectors.
pub fn orthonormalize<S: Scalar>(vs: &[Vec<S>], tol: f64) -> Vec<Vec<S>> {
    assert!(!S::EXACT, "orthonormalize is a float-mode operation");
    let mut out: Vec<Vec<S>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _pass in 0..2 {
            for u in &out {
                let c = dot_h(u, &w).neg();
                axpy(&mut w, &c, u);
            }
        }
        let n = norm_f64(&w);
        if n > tol {
            let inv = S::from_f64(1.0 / n);
            out.push(w.iter().map(|x| x.mul(&inv)).collect());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// complex kernels (used by the pencil samplers and the singular-locus check)
// ---------------------------------------------------------------------------

/// Dimension of the complex kernel via singular-value thresholding.
pub fn complex_kernel_dim(m: &Mat<Cx>, tol: f64) -> usize {
    m.cols - rank(m, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_mat_f64(rng: &mut SplitMix64, r: usize, c: usize) -> Mat<f64> {
        Mat::from_fn(r, c, |_, _| rng.normal())
    }

    #[test]
    fn identity_has_empty_kernel() {
        let m = Mat::<f64>::identity(3);
        assert!(kernel_basis(&m, 1e-9).is_empty());
        assert_eq!(rank(&m, 1e-9), 3);
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let m = Mat::<f64>::zeros(3, 3);
        assert_eq!(kernel_basis(&m, 1e-9).len(), 3);
        let me = Mat::<Exact>::zeros(3, 3);
        assert_eq!(kernel_basis(&me, 0.0).len(), 3);
    }

    #[test]
    fn rank_by_construction_8x7_product() {
        // random 8x4 times 4x7 has rank 4, so the kernel is 3-dimensional
        let mut rng = SplitMix64::new(2);
        let a = random_mat_f64(&mut rng, 8, 4);
        let b = random_mat_f64(&mut rng, 4, 7);
        let m = a.matmul(&b);
        assert_eq!(rank(&m, 1e-9), 4);
        let k = kernel_basis(&m, 1e-9);
        assert_eq!(k.len(), 3);
        for v in &k {
            let res = norm_f64(&m.matvec(v));
            assert!(res < 1e-9, "kernel residual {res}");
        }
    }

    #[test]
    fn outer_product_has_rank_one() {
        let u = vec![1.0, -2.0, 3.0];
        let v = vec![4.0, 5.0];
        let m = Mat::from_fn(3, 2, |i, j| u[i] * v[j]);
        assert_eq!(rank(&m, 1e-9), 1);
    }

    #[test]
    fn joint_kernel_cases() {
        let i2 = Mat::<f64>::identity(2);
        assert!(joint_kernel(&[i2.clone(), i2.clone()], 1e-9)
            .unwrap()
            .is_empty());
        let d10 = Mat::diag(&[1.0, 0.0]);
        let d01 = Mat::diag(&[0.0, 1.0]);
        assert!(joint_kernel(&[d10.clone(), d01], 1e-9).unwrap().is_empty());
        let k = joint_kernel(&[d10.clone(), d10], 1e-9).unwrap();
        assert_eq!(k.len(), 1);
        assert!(k[0][0].abs() < 1e-12 && k[0][1].abs() > 0.9);
        assert!(joint_kernel::<f64>(&[], 1e-9).is_err());
    }

    #[test]
    fn svd_resolves_exact_zeros_sharply() {
        // a rank-2 4x3 matrix: the smallest singular value must come out
        // near machine epsilon, not sqrt(eps)
        let mut rng = SplitMix64::new(9);
        let a = random_mat_f64(&mut rng, 4, 2);
        let b = random_mat_f64(&mut rng, 2, 3);
        let m = a.matmul(&b);
        let sv = singular_values(&m);
        assert!(sv[2] < 1e-12 * sv[0], "sv = {sv:?}");
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = SplitMix64::new(4);
        for n in [3usize, 8, 17, 32] {
            let a0 = random_mat_f64(&mut rng, n, n);
            let a = a0.add(&a0.transpose());
            let (vals, q) = eigh(&a, 1e-9).unwrap();
            let lam = Mat::diag(&vals);
            let rec = q.matmul(&lam).matmul(&q.transpose());
            assert!(rec.sub(&a).max_abs() < 1e-10 * a.max_abs().max(1.0));
            let orth = q.matmul(&q.transpose()).sub(&Mat::identity(n)).max_abs();
            assert!(orth < 1e-12);
        }
    }

    #[test]
    fn eigh_rejects_nonsymmetric() {
        let m = Mat::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(eigh(&m, 1e-9).is_err());
    }

    #[test]
    fn eigh_diag_example() {
        let m = Mat::diag(&[1.0, -1.0, 0.0]);
        let (vals, _) = eigh(&m, 1e-9).unwrap();
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!(vals[1].abs() < 1e-14);
        assert!((vals[2] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_kernel_echelon() {
        // [[1,2,3],[2,4,6]] has rank 1, kernel dim 2, exactly
        let m = Mat::from_fn(2, 3, |i, j| Exact::from_i64(((i + 1) * (j + 1)) as i64));
        assert_eq!(rank(&m, 0.0), 1);
        let k = kernel_basis(&m, 0.0);
        assert_eq!(k.len(), 2);
        for v in &k {
            for e in m.matvec(v) {
                assert!(e.is_zero());
            }
        }
    }

    #[test]
    fn complex_rank_and_kernel() {
        let i = Cx::new(0.0, 1.0);
        // [[1, i],[i, -1]] has rank 1 over C
        let m = Mat::from_rows(vec![vec![Cx::new(1.0, 0.0), i], vec![i, Cx::new(-1.0, 0.0)]]);
        assert_eq!(rank(&m, 1e-9), 1);
        assert_eq!(complex_kernel_dim(&m, 1e-9), 1);
        let k = kernel_basis(&m, 1e-9);
        assert_eq!(k.len(), 1);
        assert!(norm_f64(&m.matvec(&k[0])) < 1e-12);
    }

    proptest! {
        #[test]
        fn rank_plus_kernel_is_cols(seed in 0u64..500) {
            let mut rng = SplitMix64::new(seed);
            let r = 1 + (rng.next_u64() % 8) as usize;
            let c = 1 + (rng.next_u64() % 8) as usize;
            let m = Mat::from_fn(r, c, |_, _| ((rng.next_u64() % 5) as i64 - 2) as f64);
            let rk = rank(&m, 1e-9);
            let kd = kernel_basis(&m, 1e-9).len();
            prop_assert_eq!(rk + kd, c);
        }

        #[test]
        fn exact_and_float_rank_agree_on_small_integer_matrices(seed in 0u64..300) {
            let mut rng = SplitMix64::new(seed.wrapping_mul(77));
            let r = 1 + (rng.next_u64() % 7) as usize;
            let c = 1 + (rng.next_u64() % 7) as usize;
            let ints: Vec<i64> = (0..r*c).map(|_| (rng.next_u64() % 5) as i64 - 2).collect();
            let mf = Mat::from_fn(r, c, |i, j| ints[i*c+j] as f64);
            let me = Mat::from_fn(r, c, |i, j| Exact::from_i64(ints[i*c+j]));
            prop_assert_eq!(rank(&mf, 1e-9), rank(&me, 0.0));
        }
    }
}
