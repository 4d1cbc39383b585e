//! Dense row-major matrices and the small set of factorizations the
//! estimator needs: symmetric eigendecomposition (Householder
//! tridiagonalization + implicit QL), a one-sided Jacobi SVD for small
//! matrices, Cholesky, partially pivoted LU, and a power iteration for
//! spectral norms of symmetric matrices.
//!
//! Everything here runs single-threaded with a fixed summation order, so
//! results do not depend on thread count or scheduling.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`, naive with a fixed (i, k, j) loop order.
    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..orow.len() {
                    out_row[j] += a * orow[j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |self - other| entrywise.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// ‖selfᵀ·self − I‖_max, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.transpose().mul(self);
        let mut worst = 0.0f64;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl serde::Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order,
/// eigenvectors as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Full eigendecomposition of a symmetric matrix by Householder reduction
/// to tridiagonal form followed by the implicit-shift QL iteration.
pub fn symmetric_eigen(a: &Mat) -> Result<SymmetricEigen> {
    assert_eq!(a.rows, a.cols, "symmetric_eigen needs a square matrix");
    let n = a.rows;
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    let mut z = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut z, &mut d, &mut e)?;

    // sort descending, ties broken by original index so the order is total
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new)] = z[(r, old)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Householder reduction of a real symmetric matrix to tridiagonal form,
/// accumulating the orthogonal transformation in `a`. On return `d` holds
/// the diagonal and `e[1..]` the subdiagonal.
fn tred2(a: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = a.rows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[(j, i)] = a[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let delta = f * e[k] + g * a[(i, k)];
                        a[(j, k)] -= delta;
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[(i, k)] * a[(k, j)];
                }
                for k in 0..i {
                    let delta = g * a[(k, i)];
                    a[(k, j)] -= delta;
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(j, i)] = 0.0;
            a[(i, j)] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix, rotating
/// the columns of `z` along with it.
fn tql2(z: &mut Mat, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::EigenNoConvergence {
                    what: format!("QL iteration limit at eigenvalue {l} of {n}"),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m - 1;
            loop {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
                if i == l {
                    break;
                }
                i -= 1;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Singular value decomposition of a small dense matrix by one-sided
/// Jacobi rotations: `a = u · diag(s) · vᵀ` with singular values sorted
/// in descending order. Intended for K×K problems (Procrustes alignment,
/// condition numbers), not for the data matrix itself.
pub fn svd_small(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    if a.rows < a.cols {
        let (u, s, v) = svd_small(&a.transpose());
        return (v, s, u);
    }
    let m = a.rows;
    let n = a.cols;
    let mut u = a.clone();
    let mut v = Mat::identity(n);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let x = u[(r, i)];
                    let y = u[(r, j)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= 1e-30 + 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let x = u[(r, i)];
                    let y = u[(r, j)];
                    u[(r, i)] = c * x - s * y;
                    u[(r, j)] = s * x + c * y;
                }
                for r in 0..n {
                    let x = v[(r, i)];
                    let y = v[(r, j)];
                    v[(r, i)] = c * x - s * y;
                    v[(r, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = (0..n).map(|j| norm2(&u.col_vec(j))).collect();
    for j in 0..n {
        if sigma[j] > 0.0 {
            for r in 0..m {
                u[(r, j)] /= sigma[j];
            }
        }
    }
    // order descending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));
    let mut u_sorted = Mat::zeros(m, n);
    let mut v_sorted = Mat::zeros(n, n);
    let mut s_sorted = vec![0.0; n];
    for (new, &old) in order.iter().enumerate() {
        s_sorted[new] = sigma[old];
        for r in 0..m {
            u_sorted[(r, new)] = u[(r, old)];
        }
        for r in 0..n {
            v_sorted[(r, new)] = v[(r, old)];
        }
    }
    sigma = s_sorted;
    // complete zero columns of u to an orthonormal set so u stays usable
    // when the input is rank deficient
    for j in 0..n {
        if sigma[j] <= 1e-300 {
            for basis in 0..m {
                let mut cand = vec![0.0; m];
                cand[basis] = 1.0;
                for prev in 0..n {
                    if prev == j {
                        continue;
                    }
                    let proj = (0..m).map(|r| u_sorted[(r, prev)] * cand[r]).sum::<f64>();
                    for (r, item) in cand.iter_mut().enumerate() {
                        *item -= proj * u_sorted[(r, prev)];
                    }
                }
                let nrm = norm2(&cand);
                if nrm > 1e-6 {
                    for (r, item) in cand.iter().enumerate() {
                        u_sorted[(r, j)] = item / nrm;
                    }
                    break;
                }
            }
        }
    }
    (u_sorted, sigma, v_sorted)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or
/// `None` if a pivot is not strictly positive.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[(i, j)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// LU factorization with partial pivoting, for small square solves.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Mat,
    piv: Vec<usize>,
}

impl Lu {
    /// Returns `None` when a pivot is exactly zero (structurally singular).
    pub fn new(a: &Mat) -> Option<Lu> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut best = col;
            let mut best_abs = lu[(col, col)].abs();
            for r in (col + 1)..n {
                let v = lu[(r, col)].abs();
                if v > best_abs {
                    best = r;
                    best_abs = v;
                }
            }
            if best_abs == 0.0 {
                return None;
            }
            if best != col {
                for c in 0..n {
                    let tmp = lu[(col, c)];
                    lu[(col, c)] = lu[(best, c)];
                    lu[(best, c)] = tmp;
                }
                piv.swap(col, best);
            }
            let pivot = lu[(col, col)];
            for r in (col + 1)..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                for c in (col + 1)..n {
                    let delta = factor * lu[(col, c)];
                    lu[(r, c)] -= delta;
                }
            }
        }
        Some(Lu { lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&i| b[i]).collect();
        for i in 1..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Sin-theta distance between the column spans of two orthonormal p×K
/// matrices: the spectral norm of the difference of their projectors.
///
/// Computed as the largest singular value of `(I − A·Aᵀ)·B`, which stays
/// accurate down to machine precision for nearly equal subspaces; the
/// textbook `sqrt(1 − σ_min(AᵀB)²)` form bottoms out near `sqrt(2·eps)`.
pub fn subspace_sin_theta(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.cols(), b.cols());
    let atb = a.transpose().mul(b);
    let residual_rows: Vec<Vec<f64>> = (0..a.rows())
        .map(|r| {
            (0..b.cols())
                .map(|c| {
                    let mut proj = 0.0;
                    for t in 0..a.cols() {
                        proj += a[(r, t)] * atb[(t, c)];
                    }
                    b[(r, c)] - proj
                })
                .collect()
        })
        .collect();
    let residual = Mat::from_rows(&residual_rows);
    let (_, s, _) = svd_small(&residual);
    s.first().copied().unwrap_or(0.0).min(1.0)
}

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix by power
/// iteration on the squared operator, from a seeded start vector. The
/// squared operator avoids sign oscillation between ±λ pairs.
pub fn spectral_norm_symmetric(a: &Mat, tol: f64, max_iter: usize, seed: u64) -> f64 {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    if n == 0 {
        return 0.0;
    }
    let mut rng = SplitMix64::new(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let nrm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    let mut lambda_sq = 0.0;
    for _ in 0..max_iter {
        let av = a.mul_vec(&v);
        let aav = a.mul_vec(&av);
        lambda_sq = dot(&v, &aav);
        let mut resid = 0.0;
        for i in 0..n {
            let r = aav[i] - lambda_sq * v[i];
            resid += r * r;
        }
        let nrm = norm2(&aav);
        if nrm == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = aav[i] / nrm;
        }
        if resid.sqrt() <= tol * lambda_sq.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    lambda_sq.max(0.0).sqrt()
}
