//! The multiscale two-sample test: pooling, per-bin randomized binomial
//! p-values, combination over the tree and Rademacher-mark calibration.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore};

use crate::combine::{dp_all_levels, min_all_nodes, Adjustment, Calibration, Combiner, PvalGrid, PvalTree};
use crate::dists::HalfBinomialTails;
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::partition::{Domain, PartitionTree};
use crate::pointproc::PointPattern;
use crate::rng;

/// Pooled event positions with `-1` marks for the first sample and `+1`
/// marks for the second.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPool {
    positions: Vec<f64>,
    marks: Vec<i8>,
    domain: Domain,
}

impl MarkedPool {
    pub fn new(positions: Vec<f64>, marks: Vec<i8>, domain: Domain) -> Result<Self> {
        if positions.len() != marks.len() {
            return invalid("positions and marks differ in length");
        }
        if marks.iter().any(|&m| m != 1 && m != -1) {
            return invalid("marks must be -1 or +1");
        }
        if positions.windows(2).any(|w| w[0] > w[1]) || positions.iter().any(|&x| !domain.contains(x)) {
            return invalid("positions must be sorted and inside the domain");
        }
        Ok(Self { positions, marks, domain })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn marks(&self) -> &[i8] {
        &self.marks
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions carrying mark `mark`, in order.
    pub fn subset(&self, mark: i8) -> Vec<f64> {
        self.positions.iter().zip(&self.marks).filter(|(_, &m)| m == mark).map(|(&x, _)| x).collect()
    }
}

/// Merges two patterns; ties keep events of `a` first.
pub fn pool(a: &PointPattern, b: &PointPattern) -> Result<MarkedPool> {
    if a.domain() != b.domain() {
        return invalid("samples live on different domains");
    }
    let (xa, xb) = (a.events(), b.events());
    let mut positions = Vec::with_capacity(xa.len() + xb.len());
    let mut marks = Vec::with_capacity(xa.len() + xb.len());
    let (mut i, mut k) = (0, 0);
    while i < xa.len() || k < xb.len() {
        if k == xb.len() || (i < xa.len() && xa[i] <= xb[k]) {
            positions.push(xa[i]);
            marks.push(-1);
            i += 1;
        } else {
            positions.push(xb[k]);
            marks.push(1);
            k += 1;
        }
    }
    Ok(MarkedPool { positions, marks, domain: a.domain() })
}

/// Fills `marks` with i.i.d. fair `±1` values.
pub fn fill_rademacher<R: RngCore + ?Sized>(marks: &mut [i8], rng: &mut R) {
    for chunk in marks.chunks_mut(64) {
        let bits = rng.next_u64();
        for (i, m) in chunk.iter_mut().enumerate() {
            *m = if (bits >> i) & 1 == 1 { 1 } else { -1 };
        }
    }
}

/// Same positions, fresh i.i.d. fair `±1` marks.
pub fn rademacher_resample<R: RngCore + ?Sized>(pool: &MarkedPool, rng: &mut R) -> MarkedPool {
    let mut marks = vec![0i8; pool.len()];
    fill_rademacher(&mut marks, rng);
    MarkedPool { positions: pool.positions.clone(), marks, domain: pool.domain }
}

/// Settings of a two-sample run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleConfig {
    pub boot: usize,
    pub combiner: Combiner,
    pub alpha: f64,
    pub calibration: Calibration,
    pub include_root_level: bool,
    pub seed: u64,
}

impl Default for TwoSampleConfig {
    fn default() -> Self {
        Self {
            boot: 500,
            combiner: Combiner::Fisher,
            alpha: 0.05,
            calibration: Calibration::Resample,
            include_root_level: false,
            seed: 0,
        }
    }
}

/// Number of levels giving roughly 10–20 pooled events per leaf bin.
pub fn default_levels(events: usize) -> usize {
    let ratio = events as f64 / 15.0;
    if ratio <= 2.0 {
        1
    } else {
        (ratio.log2().round() as usize).clamp(1, crate::partition::MAX_LEVELS)
    }
}

/// Per-pool precomputation shared by the observed run and every replicate:
/// leaf indices of the events and binomial tail tables of every bin.
pub struct TwoSampleEngine {
    depth: usize,
    combiner: Combiner,
    include_root: bool,
    leaf: Vec<u32>,
    // tails[r] for r = 0..=R, one table per bin.
    tails: Vec<Vec<HalfBinomialTails>>,
}

impl TwoSampleEngine {
    pub fn new(positions: &[f64], tree: &PartitionTree, combiner: Combiner, include_root: bool) -> Self {
        let depth = tree.levels();
        let leaf = tree.leaf_indices(positions);
        let mut totals = vec![0u64; 1 << depth];
        for &l in &leaf {
            totals[l as usize] += 1;
        }
        let levels = aggregate(totals, depth);
        let tails = levels.iter().map(|row| row.iter().map(|&m| HalfBinomialTails::new(m)).collect()).collect();
        Self { depth, combiner, include_root, leaf, tails }
    }

    /// Level-ordered `p̃` for one marking, drawing the randomization uniforms
    /// from `rng`.
    pub fn p_tilde<R: Rng + ?Sized>(&self, marks: &[i8], rng: &mut R) -> Vec<f64> {
        let mut neg = vec![0u64; 1 << self.depth];
        for (&l, &m) in self.leaf.iter().zip(marks) {
            if m < 0 {
                neg[l as usize] += 1;
            }
        }
        let counts = aggregate(neg, self.depth);
        let mut pvalue = |r: usize, l: usize| {
            let table = &self.tails[r][l];
            let d = (2 * counts[r][l]).abs_diff(table.total());
            let u: f64 = rng.random();
            u * table.tail_doubled(d) + (1.0 - u) * table.tail_doubled(d + 2)
        };
        let root = if self.include_root { Some(pvalue(0, 0)) } else { None };
        let levels = (1..=self.depth).map(|r| (0..1 << r).map(|l| pvalue(r, l)).collect()).collect();
        let grid = PvalGrid::new(levels, root).expect("randomized p-values form a valid grid");
        min_all_nodes(&dp_all_levels(&grid, self.combiner))
    }
}

/// Counts per level `0..=R` from leaf counts.
pub(crate) fn aggregate(leaf: Vec<u64>, depth: usize) -> Vec<Vec<u64>> {
    let mut levels = vec![Vec::new(); depth + 1];
    levels[depth] = leaf;
    for r in (0..depth).rev() {
        let child = &levels[r + 1];
        levels[r] = child.chunks(2).map(|c| c[0] + c[1]).collect();
    }
    levels
}

/// Runs the full two-sample test on the pooled samples.
pub fn run_two_sample<E: Executor>(
    a: &PointPattern,
    b: &PointPattern,
    tree: &PartitionTree,
    cfg: &TwoSampleConfig,
    exec: &E,
) -> Result<PvalTree> {
    let pooled = pool(a, b)?;
    run_pooled(&pooled, tree, cfg, exec)
}

/// Runs the test on an already pooled sample.
pub fn run_pooled<E: Executor>(pooled: &MarkedPool, tree: &PartitionTree, cfg: &TwoSampleConfig, exec: &E) -> Result<PvalTree> {
    if cfg.boot < 1 && cfg.calibration == Calibration::Resample {
        return invalid("at least one resampling replicate is required");
    }
    if pooled.domain() != tree.domain() {
        return invalid("partition and samples live on different domains");
    }
    let engine = TwoSampleEngine::new(pooled.positions(), tree, cfg.combiner, cfg.include_root_level);
    let observed = engine.p_tilde(pooled.marks(), &mut rng::child_stream(cfg.seed, 0));
    let replicates = match cfg.calibration {
        Calibration::Resample => exec.map(cfg.boot, |i| {
            let mut stream = rng::child_stream(cfg.seed, i as u64 + 1);
            let mut marks = vec![0i8; pooled.len()];
            fill_rademacher(&mut marks, &mut stream);
            engine.p_tilde(&marks, &mut stream)
        }),
        Calibration::Bonferroni => Vec::new(),
    };
    PvalTree::assemble(
        tree,
        &observed,
        &replicates,
        Adjustment { alpha: cfg.alpha, calibration: cfg.calibration, reverse_logic: true },
    )
}
