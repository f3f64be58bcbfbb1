//! Symmetric eigenvalue kernels: Householder tridiagonalization with Sturm
//! bisection for dense matrices, and a Lanczos iteration for the largest
//! eigenvalue of matrix-free operators.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};

/// Relative accuracy targeted for eigenvalues.
pub const EIG_TOL: f64 = 1e-10;

/// Operators at or below this dimension are materialized and solved densely.
pub const DENSE_LIMIT: usize = 48;

/// A symmetric linear operator `y = M x`.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    a: Vec<f64>,
}

impl DenseSym {
    /// Validates shape and symmetry to `1e-12` relative to the largest entry.
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return invalid("matrix storage does not match its dimension");
        }
        if a.iter().any(|x| !x.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                    return invalid("matrix is not symmetric");
                }
            }
        }
        Ok(Self { n, a })
    }

    pub(crate) fn new_unchecked(n: usize, a: Vec<f64>) -> Self {
        Self { n, a }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.a
    }
}

impl SymOperator for DenseSym {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, yi) in self.a.chunks_exact(self.n).zip(y.iter_mut()) {
            *yi = dot(row, x);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Reduces a dense symmetric matrix to tridiagonal form `(diag, offdiag)`.
pub fn tridiagonalize(m: &DenseSym) -> (Vec<f64>, Vec<f64>) {
    let n = m.n;
    let mut a = m.a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<f64> = (0..len).map(|i| a[(k + 1 + i) * n + k]).collect();
        let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        d[k] = a[k * n + k];
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let v = &mut v[..len];
        v.copy_from_slice(&x);
        v[0] -= alpha;
        let vn = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        e[k] = alpha;
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vn);
        let p = &mut p[..len];
        for i in 0..len {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = dot(row, v);
        }
        let kk = dot(p, v);
        for i in 0..len {
            p[i] -= kk * v[i];
        }
        for i in 0..len {
            let (vi, qi) = (2.0 * v[i], 2.0 * p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..len {
                row[j] -= vi * p[j] + qi * v[j];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        d[n - 1] = a[(n - 1) * n + n - 1];
    }
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = if i == 0 { d[0] - x } else { d[i] - x - off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1e-300);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < e.len() { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th largest eigenvalue (`k = 0` is the largest) of a symmetric
/// tridiagonal matrix, by bisection.
pub fn tridiagonal_kth_largest(d: &[f64], e: &[f64], k: usize) -> f64 {
    let n = d.len();
    let (mut lo, mut hi) = gershgorin(d, e);
    let span = (hi - lo).max(lo.abs().max(hi.abs())).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;
    // Want x with count(< x) <= n - k - 1 < count(< hi).
    let target = n - k - 1;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DenseSym) -> Vec<f64> {
    let (d, e) = tridiagonalize(m);
    let n = d.len();
    (0..n).rev().map(|k| tridiagonal_kth_largest(&d, &e, k)).collect()
}

/// Largest eigenvalue of a symmetric operator, materializing small ones.
pub fn largest_eigenvalue<O: SymOperator + ?Sized>(op: &O) -> f64 {
    let n = op.dim();
    if n == 0 {
        return f64::NAN;
    }
    if n <= DENSE_LIMIT {
        let mut a = vec![0.0; n * n];
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            x.iter_mut().for_each(|t| *t = 0.0);
            x[j] = 1.0;
            op.apply(&x, &mut y);
            for i in 0..n {
                a[i * n + j] = y[i];
            }
        }
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = s;
                a[j * n + i] = s;
            }
        }
        let (d, e) = tridiagonalize(&DenseSym::new_unchecked(n, a));
        return tridiagonal_kth_largest(&d, &e, 0);
    }
    lanczos_largest(op, EIG_TOL)
}

/// Largest eigenvalue of a dense symmetric matrix.
pub fn max_eigenvalue(m: &DenseSym) -> f64 {
    if m.n <= 400 {
        let (d, e) = tridiagonalize(m);
        if m.n == 0 {
            return f64::NAN;
        }
        tridiagonal_kth_largest(&d, &e, 0)
    } else {
        lanczos_largest(m, EIG_TOL)
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n as u64)
        .map(|i| {
            let h = crate::rng::mix(i ^ 0x5eed_1234_abcd_ef01);
            1.0 + ((h >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|t| *t /= norm);
    v
}

/// Last component of the unit eigenvector of the tridiagonal matrix for the
/// eigenvalue `theta`, by two steps of shifted inverse iteration.
fn last_component(d: &[f64], e: &[f64], theta: f64, scale: f64) -> f64 {
    let n = d.len();
    let shift = theta + 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut y = vec![1.0; n];
    let mut c = vec![0.0; n];
    let mut z = vec![0.0; n];
    for _ in 0..2 {
        // Solve (T - shift) z = y; the matrix is negative definite.
        let mut diag = d[0] - shift;
        c[0] = diag;
        z[0] = y[0];
        for i in 1..n {
            let l = e[i - 1] / c[i - 1];
            diag = d[i] - shift - l * e[i - 1];
            c[i] = if diag == 0.0 { -f64::MIN_POSITIVE } else { diag };
            z[i] = y[i] - l * z[i - 1];
        }
        z[n - 1] /= c[n - 1];
        for i in (0..n - 1).rev() {
            z[i] = (z[i] - e[i] * z[i + 1]) / c[i];
        }
        let norm = dot(&z, &z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return 1.0;
        }
        for i in 0..n {
            y[i] = z[i] / norm;
        }
    }
    y[n - 1].abs()
}

/// Lanczos iteration for the largest eigenvalue of a symmetric operator.
///
/// No reorthogonalization is performed: loss of orthogonality only produces
/// spurious copies of converged Ritz values, which does not affect the
/// largest one. Convergence is declared when the residual bound
/// `β_k |s_k|` (or its gap-refined square) drops below `tol` relative to the
/// spectral scale, or the top Ritz value has stopped moving.
pub fn lanczos_largest<O: SymOperator + ?Sized>(op: &O, tol: f64) -> f64 {
    let n = op.dim();
    let max_iter = (3 * n).clamp(60, 4000);
    let mut v = start_vector(n);
    let mut v_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut last_theta = f64::NAN;
    let mut stable = 0;
    for k in 0..max_iter {
        op.apply(&v, &mut w);
        if k > 0 {
            axpy(-beta_prev, &v_prev, &mut w);
        }
        let alpha = dot(&w, &v);
        axpy(-alpha, &v, &mut w);
        let beta = dot(&w, &w).sqrt();
        alphas.push(alpha);
        let (lo, hi) = gershgorin(&alphas, &betas);
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if beta <= 1e-14 * scale || k + 1 == n.max(1) && n <= 2 {
            return tridiagonal_kth_largest(&alphas, &betas, 0);
        }
        let m = k + 1;
        if m >= 8 && m % 4 == 0 {
            let theta = tridiagonal_kth_largest(&alphas, &betas, 0);
            let second = tridiagonal_kth_largest(&alphas, &betas, 1);
            let s = last_component(&alphas, &betas, theta, scale);
            let r = beta * s;
            let gap = theta - second;
            let bound = if gap > 0.0 { r.min(r * r / gap) } else { r };
            if bound <= tol * scale {
                return theta;
            }
            if (theta - last_theta).abs() <= 1e-3 * tol * scale {
                stable += 1;
                if stable >= 3 {
                    return theta;
                }
            } else {
                stable = 0;
            }
            last_theta = theta;
        }
        betas.push(beta);
        core::mem::swap(&mut v_prev, &mut v);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / beta;
        }
        beta_prev = beta;
    }
    tridiagonal_kth_largest(&alphas, &betas[..alphas.len() - 1], 0)
}
