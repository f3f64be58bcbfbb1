//! Null resampling of network pair marks: uniform pairs, uniform bipartite
//! pairs, and a degree-preserving Metropolis–Hastings chain.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::netstats::CountMatrix;

/// Pair marks aligned with pooled event positions; symmetric marks have `u < v`.
pub type EdgeMarks = Vec<(u32, u32)>;

/// `len` marks drawn i.i.d. uniformly over the `n(n-1)/2` unordered pairs.
pub fn uniform_pair_resample<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Result<EdgeMarks> {
    if n < 2 {
        return invalid("uniform pair resampling needs at least two nodes");
    }
    let n = n as u32;
    Ok((0..len)
        .map(|_| loop {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v {
                break if u < v { (u, v) } else { (v, u) };
            }
        })
        .collect())
}

/// `len` marks drawn i.i.d. uniformly over the `m·n` (row, column) pairs.
pub fn uniform_bipartite_resample<R: Rng + ?Sized>(len: usize, m: usize, n: usize, rng: &mut R) -> Result<EdgeMarks> {
    if m < 1 || n < 1 {
        return invalid("bipartite resampling needs nonempty node sets");
    }
    let (m, n) = (m as u32, n as u32);
    Ok((0..len).map(|_| (rng.random_range(0..m), rng.random_range(0..n))).collect())
}

/// Pair counts of `total` marks drawn uniformly over the `n(n-1)/2`
/// unordered pairs. Equal in distribution to binning
/// [`uniform_pair_resample`] output; heavy totals use recursive binomial
/// splitting instead of one draw per mark.
pub fn uniform_pair_counts<R: Rng + ?Sized>(total: u64, n: usize, rng: &mut R) -> Result<CountMatrix> {
    if n < 2 {
        return invalid("uniform pair resampling needs at least two nodes");
    }
    let pairs = n * (n - 1) / 2;
    let mut counts = vec![0u32; pairs];
    if total <= 64 * pairs as u64 {
        for _ in 0..total {
            counts[rng.random_range(0..pairs)] += 1;
        }
    } else {
        let mut stack = vec![(0usize, pairs, total)];
        while let Some((lo, len, c)) = stack.pop() {
            if c == 0 {
                continue;
            }
            if len == 1 {
                counts[lo] += c as u32;
                continue;
            }
            let half = len / 2;
            let left = Binomial::new(c, half as f64 / len as f64).expect("valid probability").sample(rng);
            stack.push((lo, half, left));
            stack.push((lo + half, len - half, c - left));
        }
    }
    let mut m = CountMatrix::zeros(n, n);
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            m.set_pair(u, v, counts[k]);
            k += 1;
        }
    }
    Ok(m)
}

/// Number of marks touching each node.
pub fn degree_vector(marks: &[(u32, u32)], n: usize) -> Vec<u64> {
    let mut d = vec![0u64; n];
    for &(u, v) in marks {
        d[u as usize] += 1;
        d[v as usize] += 1;
    }
    d
}

fn canonical(a: u32, b: u32) -> (u32, u32) {
    if a < b { (a, b) } else { (b, a) }
}

/// The pair rewiring selected by `outcome ∈ 0..5` for marks `mi`, `mj`.
pub fn mh_proposal(mi: (u32, u32), mj: (u32, u32), outcome: u8) -> ((u32, u32), (u32, u32)) {
    let ((ui, vi), (uj, vj)) = (mi, mj);
    match outcome {
        0 => (mj, mi),
        1 => ((ui, vj), (uj, vi)),
        2 => ((uj, vi), (ui, vj)),
        3 => ((ui, uj), (vi, vj)),
        _ => ((vi, vj), (ui, uj)),
    }
}

/// Applies one proposal at indices `i ≠ j`; returns whether it was accepted.
pub fn mh_apply(marks: &mut [(u32, u32)], i: usize, j: usize, outcome: u8) -> bool {
    let (a, b) = mh_proposal(marks[i], marks[j], outcome);
    if a.0 == a.1 || b.0 == b.1 {
        return false;
    }
    marks[i] = canonical(a.0, a.1);
    marks[j] = canonical(b.0, b.1);
    true
}

/// One Metropolis–Hastings step: uniform index pair, uniform rewiring,
/// rejection of self-pairs. Returns whether the proposal was accepted.
pub fn mh_step<R: Rng + ?Sized>(marks: &mut [(u32, u32)], rng: &mut R) -> Result<bool> {
    let n = marks.len();
    if n < 2 {
        return invalid("the degree-preserving chain needs at least two marks");
    }
    Ok(step_unchecked(marks, rng))
}

#[inline]
fn step_unchecked<R: Rng + ?Sized>(marks: &mut [(u32, u32)], rng: &mut R) -> bool {
    let n = marks.len();
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let outcome = rng.random_range(0..5u8);
    mh_apply(marks, i, j, outcome)
}

/// Runs `steps` chain steps in place (rejected proposals count as steps).
pub fn mh_run<R: Rng + ?Sized>(marks: &mut [(u32, u32)], steps: u64, rng: &mut R) {
    if marks.len() < 2 {
        return;
    }
    for _ in 0..steps {
        step_unchecked(marks, rng);
    }
}

/// Burn-in and thinning of the degree-preserving chain, in multiples of the
/// number of marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcSchedule {
    pub burnin_factor: f64,
    pub thin_factor: f64,
    pub independent_chains: bool,
}

impl Default for McmcSchedule {
    fn default() -> Self {
        Self { burnin_factor: 10.0, thin_factor: 5.0, independent_chains: false }
    }
}

impl McmcSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.burnin_factor >= 0.0 && self.thin_factor > 0.0) || !self.burnin_factor.is_finite() || !self.thin_factor.is_finite() {
            return invalid("burn-in factor must be nonnegative and thinning factor positive");
        }
        Ok(())
    }

    pub fn burnin_steps(&self, marks: usize) -> u64 {
        (self.burnin_factor * marks as f64).ceil() as u64
    }

    pub fn thin_steps(&self, marks: usize) -> u64 {
        ((self.thin_factor * marks as f64).ceil() as u64).max(1)
    }
}
