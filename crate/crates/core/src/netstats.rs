//! Per-bin network statistics: count-matrix binning, the centered and scaled
//! largest eigenvalue with Tracy–Widom p-values (optionally bootstrap
//! corrected), the signed triangle / quadrilateral statistics with normal
//! p-values, and the bipartite eigenvalue statistic.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dists::{normal_two_sided, Tw1Table, TW1_MEAN, TW1_SD};
use crate::error::{invalid, Result};
use crate::linalg::{largest_eigenvalue, DenseSym, SymOperator};
use crate::network::LongitudinalNetwork;
use crate::partition::PartitionTree;

/// Dense nonnegative integer matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged count matrix");
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    /// Symmetric counts of the given 0-based pair marks.
    pub fn from_pairs(n: usize, pairs: &[(u32, u32)]) -> Self {
        let mut m = Self::zeros(n, n);
        for &(u, v) in pairs {
            m.data[u as usize * n + v as usize] += 1;
            m.data[v as usize * n + u as usize] += 1;
        }
        m
    }

    pub(crate) fn set_pair(&mut self, u: usize, v: usize, count: u32) {
        self.data[u * self.cols + v] = count;
        self.data[v * self.cols + u] = count;
    }

    /// Rectangular counts of the given 0-based (row, column) marks.
    pub fn from_bipartite_pairs(rows: usize, cols: usize, pairs: &[(u32, u32)]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for &(u, v) in pairs {
            m.data[u as usize * cols + v as usize] += 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn total(&self) -> u64 {
        self.data.iter().map(|&x| x as u64).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn check_adjacency(&self) -> Result<()> {
        if !self.is_symmetric() {
            return invalid("adjacency matrix must be square and symmetric");
        }
        if (0..self.rows).any(|i| self.get(i, i) != 0) {
            return invalid("adjacency matrix must have a zero diagonal");
        }
        if self.rows < 2 {
            return invalid("adjacency matrix needs at least two nodes");
        }
        Ok(())
    }

    fn nonzeros(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0).count()
    }
}

/// A local p-value, with `degenerate` set when the bin carried too little
/// data for the statistic and `p = 1` was substituted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPvalue {
    pub p: f64,
    pub degenerate: bool,
}

impl LocalPvalue {
    pub fn value(p: f64) -> Self {
        Self { p, degenerate: false }
    }

    pub fn degenerate() -> Self {
        Self { p: 1.0, degenerate: true }
    }
}

fn bin_range(net: &LongitudinalNetwork, tree: &PartitionTree, r: usize, l: usize) -> Result<(f64, f64)> {
    net.check_tree(tree)?;
    tree.region(r, l)
}

/// Symmetric counts of the events between each pair inside bin `(r, ℓ)`.
pub fn bin_adjacency(net: &LongitudinalNetwork, tree: &PartitionTree, r: usize, l: usize) -> Result<CountMatrix> {
    if !net.is_symmetric() {
        return invalid("bipartite networks are binned with bin_bipartite");
    }
    let (lo, hi) = bin_range(net, tree, r, l)?;
    let pairs: Vec<(u32, u32)> =
        net.events().iter().filter(|e| e.t >= lo && e.t < hi).map(|e| (e.u, e.v)).collect();
    Ok(CountMatrix::from_pairs(net.shape().0, &pairs))
}

/// Rectangular counts of the bipartite events inside bin `(r, ℓ)`.
pub fn bin_bipartite(net: &LongitudinalNetwork, tree: &PartitionTree, r: usize, l: usize) -> Result<CountMatrix> {
    if net.is_symmetric() {
        return invalid("symmetric networks are binned with bin_adjacency");
    }
    let (lo, hi) = bin_range(net, tree, r, l)?;
    let pairs: Vec<(u32, u32)> =
        net.events().iter().filter(|e| e.t >= lo && e.t < hi).map(|e| (e.u, e.v)).collect();
    let (m, n) = net.shape();
    Ok(CountMatrix::from_bipartite_pairs(m, n, &pairs))
}

/// Compressed rows of a count matrix as `f64`.
struct Csr {
    rows: usize,
    cols: usize,
    ptr: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

enum Storage {
    Dense { rows: usize, cols: usize, a: Vec<f64> },
    Sparse(Csr),
}

impl Storage {
    fn new(c: &CountMatrix) -> Self {
        if c.nonzeros() * 4 < c.data.len() {
            let mut ptr = Vec::with_capacity(c.rows + 1);
            let mut idx = Vec::new();
            let mut val = Vec::new();
            ptr.push(0);
            for row in c.data.chunks_exact(c.cols.max(1)).take(c.rows) {
                for (j, &x) in row.iter().enumerate() {
                    if x != 0 {
                        idx.push(j as u32);
                        val.push(x as f64);
                    }
                }
                ptr.push(idx.len());
            }
            Storage::Sparse(Csr { rows: c.rows, cols: c.cols, ptr, idx, val })
        } else {
            Storage::Dense { rows: c.rows, cols: c.cols, a: c.data.iter().map(|&x| x as f64).collect() }
        }
    }

    /// `y = M x`.
    fn mul(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Storage::Dense { cols, a, .. } => {
                for (row, yi) in a.chunks_exact(*cols).zip(y.iter_mut()) {
                    *yi = crate::linalg::dot(row, x);
                }
            }
            Storage::Sparse(c) => {
                for i in 0..c.rows {
                    let mut s = 0.0;
                    for k in c.ptr[i]..c.ptr[i + 1] {
                        s += c.val[k] * x[c.idx[k] as usize];
                    }
                    y[i] = s;
                }
            }
        }
    }

    /// `y = Mᵀ x`.
    fn mul_t(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|t| *t = 0.0);
        match self {
            Storage::Dense { cols, a, .. } => {
                for (row, &xi) in a.chunks_exact(*cols).zip(x) {
                    for (yj, &aij) in y.iter_mut().zip(row) {
                        *yj += aij * xi;
                    }
                }
            }
            Storage::Sparse(c) => {
                for i in 0..c.rows {
                    for k in c.ptr[i]..c.ptr[i + 1] {
                        y[c.idx[k] as usize] += c.val[k] * x[i];
                    }
                }
            }
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            Storage::Dense { rows, cols, .. } => (*rows, *cols),
            Storage::Sparse(c) => (c.rows, c.cols),
        }
    }
}

/// `x ↦ (A x - γ̂ (1ᵀx 1 - x)) / c`, the centered and scaled adjacency.
struct CenteredSym {
    a: Storage,
    gamma: f64,
    scale: f64,
}

impl SymOperator for CenteredSym {
    fn dim(&self) -> usize {
        self.a.shape().0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.mul(x, y);
        let sum: f64 = x.iter().sum();
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = (*yi - self.gamma * (sum - xi)) / self.scale;
        }
    }
}

/// `x ↦ B̃ᵀ B̃ x` with `B̃ = (B - γ̂) / c`.
struct CenteredGram {
    b: Storage,
    gamma: f64,
    scale: f64,
    tmp: core::cell::RefCell<Vec<f64>>,
}

impl SymOperator for CenteredGram {
    fn dim(&self) -> usize {
        self.b.shape().1
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = self.tmp.borrow_mut();
        self.b.mul(x, &mut t);
        let sx: f64 = x.iter().sum();
        t.iter_mut().for_each(|ti| *ti -= self.gamma * sx);
        self.b.mul_t(&t, y);
        let st: f64 = t.iter().sum();
        let c2 = self.scale * self.scale;
        y.iter_mut().for_each(|yi| *yi = (*yi - self.gamma * st) / c2);
    }
}

/// Off-diagonal mean `γ̂` of a symmetric count matrix.
fn sym_gamma(a: &CountMatrix) -> f64 {
    let n = a.rows as f64;
    a.total() as f64 / (n * n - n)
}

/// Dense `Ã = (A - γ̂) / √((n-1) γ̂)` off the diagonal, zero on it; `None`
/// when the bin is empty.
pub fn center_scale(a: &CountMatrix) -> Result<Option<DenseSym>> {
    a.check_adjacency()?;
    let gamma = sym_gamma(a);
    if gamma == 0.0 {
        return Ok(None);
    }
    let n = a.rows;
    let c = ((n - 1) as f64 * gamma).sqrt();
    let data = (0..n * n)
        .map(|k| if k / n == k % n { 0.0 } else { (a.data[k] as f64 - gamma) / c })
        .collect();
    Ok(Some(DenseSym::new(n, data)?))
}

/// `λ₁(Ã)`, the algebraically largest eigenvalue of the centered and scaled
/// adjacency; `None` for an empty bin.
pub fn centered_top_eigenvalue(a: &CountMatrix) -> Result<Option<f64>> {
    a.check_adjacency()?;
    let gamma = sym_gamma(a);
    if gamma == 0.0 {
        return Ok(None);
    }
    let scale = ((a.rows - 1) as f64 * gamma).sqrt();
    let op = CenteredSym { a: Storage::new(a), gamma, scale };
    Ok(Some(largest_eigenvalue(&op)))
}

/// `n^{2/3} (λ₁ - 2)`.
pub fn tw_statistic(n: usize, lambda: f64) -> f64 {
    (n as f64).powf(2.0 / 3.0) * (lambda - 2.0)
}

/// Two-sided Tracy–Widom p-value of the centered and scaled largest
/// eigenvalue.
pub fn tw_eig_pvalue(a: &CountMatrix, table: &Tw1Table) -> Result<LocalPvalue> {
    Ok(match centered_top_eigenvalue(a)? {
        Some(l) => LocalPvalue::value(table.two_sided(tw_statistic(a.rows, l))),
        None => LocalPvalue::degenerate(),
    })
}

/// `μ_TW + σ_TW (λ - μ̂) / ŝ` with `μ̂, ŝ` the mean and sample standard
/// deviation of the replicate eigenvalues; `None` when `ŝ = 0` or fewer
/// than two replicates are available.
pub fn bootstrap_corrected(lambda: f64, replicates: &[f64]) -> Option<f64> {
    let (mean, sd) = mean_sd(replicates)?;
    Some(TW1_MEAN + TW1_SD * (lambda - mean) / sd)
}

pub(crate) fn mean_sd(x: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        Some((mean, sd))
    } else {
        None
    }
}

/// Bootstrap-corrected Tracy–Widom p-value of `a` given null replicate
/// matrices of the same bin.
pub fn bootstrap_tw_pvalue(a: &CountMatrix, replicates: &[CountMatrix], table: &Tw1Table) -> Result<LocalPvalue> {
    let Some(lambda) = centered_top_eigenvalue(a)? else { return Ok(LocalPvalue::degenerate()) };
    let mut reps = Vec::with_capacity(replicates.len());
    for r in replicates {
        if let Some(l) = centered_top_eigenvalue(r)? {
            reps.push(l);
        }
    }
    Ok(match bootstrap_corrected(lambda, &reps) {
        Some(s) => LocalPvalue::value(table.two_sided(s)),
        None => LocalPvalue::degenerate(),
    })
}

/// `η̂ = A 1 / √V` and `V = 1ᵀ A 1`; `None` when `V = 0`.
pub fn eta_hat(a: &CountMatrix) -> Result<Option<(Vec<f64>, f64)>> {
    a.check_adjacency()?;
    let v = a.total() as f64;
    if v == 0.0 {
        return Ok(None);
    }
    let root = v.sqrt();
    let eta = a.data.chunks_exact(a.cols).map(|row| row.iter().map(|&x| x as f64).sum::<f64>() / root).collect();
    Ok(Some((eta, v)))
}

/// Signed triangle and quadrilateral statistics of one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgnStats {
    pub t: f64,
    pub q: f64,
    /// `‖η̂‖²`.
    pub eta_norm_sq: f64,
}

impl SgnStats {
    /// Standardized signed triangle statistic; `None` when `‖η̂‖² ≤ 1`.
    pub fn z_t(&self) -> Option<f64> {
        let d = self.eta_norm_sq - 1.0;
        (d > 0.0).then(|| self.t / (6.0f64.sqrt() * d.powf(1.5)))
    }

    /// Standardized signed quadrilateral statistic; `None` when `‖η̂‖² ≤ 1`.
    pub fn z_q(&self) -> Option<f64> {
        let d = self.eta_norm_sq - 1.0;
        (d > 0.0).then(|| (self.q - 2.0 * d * d) / (8.0f64.sqrt() * d * d))
    }
}

/// `M̃ = A - η̂η̂ᵀ` with zeroed diagonal, as a dense row-major matrix.
fn centered_dense(a: &CountMatrix, eta: &[f64]) -> Vec<f64> {
    let n = a.rows;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i * n + j] = a.data[i * n + j] as f64 - eta[i] * eta[j];
            }
        }
    }
    m
}

/// Both signed-polygon statistics via `M̃²`.
///
/// With a zero diagonal, `tr(M̃³)` already excludes coincident indices, and
/// the distinct-index quadrilateral sum is
/// `tr(M̃⁴) - 2 Σ_a (Σ_b M̃_ab²)² + Σ_ab M̃_ab⁴`.
pub fn sgn_stats(a: &CountMatrix) -> Result<Option<SgnStats>> {
    let Some((eta, _)) = eta_hat(a)? else { return Ok(None) };
    let n = a.rows;
    let m = centered_dense(a, &eta);
    // M̃² = A M̃ - P M̃ with P = η̂η̂ᵀ - diag(η̂²).
    let storage = Storage::new(a);
    let mut m2 = vec![0.0; n * n];
    match &storage {
        Storage::Sparse(c) => {
            for i in 0..n {
                let out = &mut m2[i * n..(i + 1) * n];
                for k in c.ptr[i]..c.ptr[i + 1] {
                    let w = c.val[k];
                    let row = &m[c.idx[k] as usize * n..(c.idx[k] as usize + 1) * n];
                    for (o, &x) in out.iter_mut().zip(row) {
                        *o += w * x;
                    }
                }
            }
        }
        Storage::Dense { a: ad, .. } => {
            for i in 0..n {
                let out = &mut m2[i * n..(i + 1) * n];
                for k in 0..n {
                    let w = ad[i * n + k];
                    if w != 0.0 {
                        let row = &m[k * n..(k + 1) * n];
                        for (o, &x) in out.iter_mut().zip(row) {
                            *o += w * x;
                        }
                    }
                }
            }
        }
    }
    let mut eta_m = vec![0.0; n];
    for k in 0..n {
        let row = &m[k * n..(k + 1) * n];
        for (e, &x) in eta_m.iter_mut().zip(row) {
            *e += eta[k] * x;
        }
    }
    for i in 0..n {
        let ei = eta[i];
        let out = &mut m2[i * n..(i + 1) * n];
        let row = &m[i * n..(i + 1) * n];
        for j in 0..n {
            out[j] -= ei * eta_m[j] - ei * ei * row[j];
        }
    }
    let mut t = 0.0;
    let mut tr4 = 0.0;
    let mut fourth = 0.0;
    let mut rsq = 0.0;
    for i in 0..n {
        rsq += m2[i * n + i] * m2[i * n + i];
        for j in 0..n {
            let (x, y) = (m2[i * n + j], m[i * n + j]);
            t += x * y;
            tr4 += x * x;
            let y2 = y * y;
            fourth += y2 * y2;
        }
    }
    let eta_norm_sq = eta.iter().map(|e| e * e).sum();
    Ok(Some(SgnStats { t, q: tr4 - 2.0 * rsq + fourth, eta_norm_sq }))
}

/// Signed triangle statistic of one bin; `None` for an empty bin.
pub fn sgnt(a: &CountMatrix) -> Result<Option<f64>> {
    Ok(sgn_stats(a)?.map(|s| s.t))
}

/// Signed quadrilateral statistic of one bin; `None` for an empty bin.
pub fn sgnq(a: &CountMatrix) -> Result<Option<f64>> {
    Ok(sgn_stats(a)?.map(|s| s.q))
}

/// Reference signed triangle sum over ordered distinct triples, `O(n³)`.
pub fn sgnt_brute(a: &CountMatrix) -> Result<Option<f64>> {
    let Some((eta, _)) = eta_hat(a)? else { return Ok(None) };
    let n = a.rows;
    let m = |i: usize, j: usize| a.get(i, j) as f64 - eta[i] * eta[j];
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k {
                    s += m(i, j) * m(j, k) * m(k, i);
                }
            }
        }
    }
    Ok(Some(s))
}

/// Reference signed quadrilateral sum over ordered distinct 4-tuples, `O(n⁴)`.
pub fn sgnq_brute(a: &CountMatrix) -> Result<Option<f64>> {
    let Some((eta, _)) = eta_hat(a)? else { return Ok(None) };
    let n = a.rows;
    let m = |i: usize, j: usize| a.get(i, j) as f64 - eta[i] * eta[j];
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                for l in 0..n {
                    if l != i && l != j && l != k {
                        s += m(i, j) * m(j, k) * m(k, l) * m(l, i);
                    }
                }
            }
        }
    }
    Ok(Some(s))
}

/// Which signed-polygon statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgnKind {
    T,
    Q,
}

/// Two-sided normal p-value of a standardized signed-polygon statistic;
/// `None` when `‖η̂‖² ≤ 1`.
pub fn sgn_pvalue(stat: f64, kind: SgnKind, eta_norm_sq: f64) -> Option<f64> {
    let s = match kind {
        SgnKind::T => SgnStats { t: stat, q: 0.0, eta_norm_sq }.z_t(),
        SgnKind::Q => SgnStats { t: 0.0, q: stat, eta_norm_sq }.z_q(),
    }?;
    Some(normal_two_sided(s))
}

/// Local p-value of one bin under the degree-corrected statistics.
pub fn sgn_local_pvalue(a: &CountMatrix, kind: SgnKind) -> Result<LocalPvalue> {
    Ok(match sgn_stats(a)? {
        Some(s) => {
            let stat = if kind == SgnKind::T { s.t } else { s.q };
            sgn_pvalue(stat, kind, s.eta_norm_sq).map_or(LocalPvalue::degenerate(), LocalPvalue::value)
        }
        None => LocalPvalue::degenerate(),
    })
}

/// `λ₁(W̃)` with `W̃ = B̃ᵀB̃`, `B̃ = (B - γ̂) / √(m γ̂)`; `None` when `γ̂ = 0`.
pub fn bipartite_top_eigenvalue(b: &CountMatrix) -> Result<Option<f64>> {
    let (m, n) = (b.rows, b.cols);
    if m < 2 || n < 2 {
        return invalid("bipartite matrices need at least two rows and columns");
    }
    let gamma = b.total() as f64 / (m * n) as f64;
    if gamma == 0.0 {
        return Ok(None);
    }
    let op = CenteredGram {
        b: Storage::new(b),
        gamma,
        scale: (m as f64 * gamma).sqrt(),
        tmp: core::cell::RefCell::new(vec![0.0; m]),
    };
    Ok(Some(largest_eigenvalue(&op)))
}

/// `(m λ₁(W̃) - (√n + √m)²) / ((√n + √m)(1/√n + 1/√m)^{1/3})`.
pub fn asym_statistic(m: usize, n: usize, lambda: f64) -> f64 {
    let (sm, sn) = ((m as f64).sqrt(), (n as f64).sqrt());
    (m as f64 * lambda - (sn + sm) * (sn + sm)) / ((sn + sm) * (1.0 / sn + 1.0 / sm).cbrt())
}

/// Two-sided Tracy–Widom p-value of the bipartite eigenvalue statistic.
pub fn asym_tw_pvalue(b: &CountMatrix, table: &Tw1Table) -> Result<LocalPvalue> {
    Ok(match bipartite_top_eigenvalue(b)? {
        Some(l) => LocalPvalue::value(table.two_sided(asym_statistic(b.rows, b.cols, l))),
        None => LocalPvalue::degenerate(),
    })
}
