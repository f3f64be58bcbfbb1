//! Randomized exact p-values, same-level combination, the bottom-up dynamic
//! program over the partition tree, calibration, hierarchical adjustment and
//! the hereditary rejection rule.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dists::{beta_1n_cdf, binom_two_sided_tail, chi2_survival};
use crate::error::{invalid, Result};
use crate::partition::PartitionTree;

/// Smallest p-value admitted before taking logarithms.
pub const P_FLOOR: f64 = 1e-300;

/// Same-level combination rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Fisher,
    Min,
}

/// How the min-across-resolution p-value is turned into a valid p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibration {
    Resample,
    Bonferroni,
}

/// `u·S(t) + (1-u)·S(t+1)` with `t = |a - m/2|` and `S` the two-sided
/// `Bin(m, 1/2)` tail.
pub fn randomized_pvalue(a: u64, m: u64, u: f64) -> Result<f64> {
    if a > m {
        return invalid("deviation count exceeds bin total");
    }
    if !(0.0..=1.0).contains(&u) {
        return invalid("randomization draw must lie in [0, 1]");
    }
    let t = (a as f64 - m as f64 / 2.0).abs();
    let upper = binom_two_sided_tail(m, t)?;
    let lower = binom_two_sided_tail(m, t + 1.0)?;
    Ok(u * upper + (1.0 - u) * lower)
}

/// Fisher's method: `P(χ²_{2k} ≥ -2 Σ log p_i)`.
pub fn fisher_combine(pvals: &[f64]) -> Result<f64> {
    if pvals.is_empty() {
        return invalid("cannot combine an empty list");
    }
    let stat: f64 = pvals.iter().map(|&p| -2.0 * p.max(P_FLOOR).ln()).sum();
    Ok(chi2_survival(2 * pvals.len() as u64, stat))
}

/// Minimum combination: `1 - (1 - min p_i)^k`.
pub fn min_combine(pvals: &[f64]) -> Result<f64> {
    if pvals.is_empty() {
        return invalid("cannot combine an empty list");
    }
    let m = pvals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(beta_1n_cdf(pvals.len() as u64, m))
}

impl Combiner {
    pub fn combine(self, pvals: &[f64]) -> Result<f64> {
        match self {
            Self::Fisher => fisher_combine(pvals),
            Self::Min => min_combine(pvals),
        }
    }
}

/// Per-bin p-values `p̄^{(r,ℓ)}` for `r = 1..=R`, plus an optional root value.
#[derive(Debug, Clone, PartialEq)]
pub struct PvalGrid {
    root: Option<f64>,
    levels: Vec<Vec<f64>>,
}

impl PvalGrid {
    /// `levels[r - 1]` holds the `2^r` values of level `r`.
    pub fn new(levels: Vec<Vec<f64>>, root: Option<f64>) -> Result<Self> {
        if levels.is_empty() {
            return invalid("a grid needs at least one level");
        }
        for (i, row) in levels.iter().enumerate() {
            if row.len() != 1usize << (i + 1) {
                return invalid(format!("level {} has {} values, expected {}", i + 1, row.len(), 1usize << (i + 1)));
            }
        }
        let in_range = |p: &f64| (0.0..=1.0).contains(p);
        if !levels.iter().flatten().all(in_range) || !root.iter().all(in_range) {
            return invalid("grid p-values must lie in [0, 1]");
        }
        Ok(Self { root, levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn root(&self) -> Option<f64> {
        self.root
    }

    /// Values at level `r ≥ 1`.
    pub fn level(&self, r: usize) -> &[f64] {
        &self.levels[r - 1]
    }
}

/// Combined p-values `p_F^{(s,j,r)}` for every node and every admissible `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedTable {
    depth: usize,
    with_root: bool,
    // entries[node] lists r = first_level(s)..=R, nodes in level order.
    entries: Vec<Vec<f64>>,
}

/// Level-order position of node `(s, j)`, `j` 1-based.
pub fn node_index(s: usize, j: usize) -> usize {
    (1usize << s) - 1 + (j - 1)
}

/// Number of nodes in a full tree of depth `R`.
pub fn node_count(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

/// Level and 1-based index of the node at level-order position `idx`.
pub fn node_at(idx: usize) -> (usize, usize) {
    let s = (usize::BITS - 1 - (idx + 1).leading_zeros()) as usize;
    (s, idx + 2 - (1usize << s))
}

impl CombinedTable {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// First resolution level present for nodes at level `s`.
    pub fn first_level(&self, s: usize) -> usize {
        if s == 0 && self.with_root { 0 } else { s.max(1) }
    }

    pub fn get(&self, s: usize, j: usize, r: usize) -> Result<f64> {
        self.check_node(s, j)?;
        let first = self.first_level(s);
        if r < first || r > self.depth {
            return invalid("resolution level not in table");
        }
        Ok(self.entries[node_index(s, j)][r - first])
    }

    /// All entries of node `(s, j)`, ordered by resolution level.
    pub fn node(&self, s: usize, j: usize) -> Result<&[f64]> {
        self.check_node(s, j)?;
        Ok(&self.entries[node_index(s, j)])
    }

    fn check_node(&self, s: usize, j: usize) -> Result<()> {
        if s > self.depth || j < 1 || j > (1usize << s) {
            return invalid("node outside the table");
        }
        Ok(())
    }
}

/// Bottom-up dynamic program producing every `p_F^{(s,j,r)}`.
///
/// For each resolution `r` the level-`r` statistics are aggregated pairwise
/// up the tree (sums of `-2 log p̄` for Fisher, minima for the minimum rule)
/// and mapped through the matching null distribution.
pub fn dp_all_levels(grid: &PvalGrid, combiner: Combiner) -> CombinedTable {
    let depth = grid.depth();
    let with_root = grid.root.is_some();
    let mut entries: Vec<Vec<f64>> = (0..node_count(depth))
        .map(|i| {
            let (s, _) = node_at(i);
            let first = if s == 0 && with_root { 0 } else { s.max(1) };
            Vec::with_capacity(depth + 1 - first)
        })
        .collect();
    let mut agg: Vec<f64> = Vec::with_capacity(1 << depth);
    let first_r = if with_root { 0 } else { 1 };
    for r in first_r..=depth {
        agg.clear();
        let values: &[f64] = if r == 0 { core::slice::from_ref(grid.root.as_ref().unwrap()) } else { grid.level(r) };
        match combiner {
            Combiner::Fisher => agg.extend(values.iter().map(|&p| -2.0 * p.max(P_FLOOR).ln())),
            Combiner::Min => agg.extend_from_slice(values),
        }
        let mut s = r;
        loop {
            let k = 1u64 << (r - s);
            let base = (1usize << s) - 1;
            for (j, &m) in agg.iter().enumerate() {
                let p = match combiner {
                    Combiner::Fisher => chi2_survival(2 * k, m),
                    Combiner::Min => beta_1n_cdf(k, m),
                };
                entries[base + j].push(p);
            }
            if s == 0 {
                break;
            }
            let half = agg.len() / 2;
            for l in 0..half {
                agg[l] = match combiner {
                    Combiner::Fisher => agg[2 * l] + agg[2 * l + 1],
                    Combiner::Min => agg[2 * l].min(agg[2 * l + 1]),
                };
            }
            agg.truncate(half);
            s -= 1;
        }
    }
    CombinedTable { depth, with_root, entries }
}

/// `p̃^{(s,j)}`: the smallest combined p-value of node `(s, j)` over resolutions.
pub fn min_across_resolutions(table: &CombinedTable, s: usize, j: usize) -> Result<f64> {
    Ok(table.node(s, j)?.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `p̃` for every node in level order.
pub fn min_all_nodes(table: &CombinedTable) -> Vec<f64> {
    table.entries.iter().map(|e| e.iter().cloned().fold(f64::INFINITY, f64::min)).collect()
}

/// `min(1, (R - s + 1) p̃)`.
pub fn bonferroni_calibrate(p_tilde: f64, s: usize, depth: usize) -> f64 {
    ((depth + 1 - s.min(depth)) as f64 * p_tilde).min(1.0)
}

/// Fraction of replicate `p̃` values that are `≤` the observed one.
pub fn resample_calibrate(observed: f64, replicates: &[f64]) -> Result<f64> {
    if replicates.is_empty() {
        return invalid("resampling calibration needs at least one replicate");
    }
    let hits = replicates.iter().filter(|&&p| p <= observed).count();
    Ok(hits as f64 / replicates.len() as f64)
}

/// Inflation factor of the hierarchical adjustment at level `s`.
pub fn meinshausen_factor(s: usize, depth: usize, reverse_logic: bool) -> f64 {
    let e = if reverse_logic { s.min(depth.saturating_sub(1)) } else { s };
    (1u64 << e) as f64
}

/// Adjusts level-ordered calibrated p-values of a depth-`R` tree.
pub fn meinshausen_adjust(p_check: &[f64], depth: usize, reverse_logic: bool) -> Result<Vec<f64>> {
    if p_check.len() != node_count(depth) {
        return invalid("p-value count does not match a full tree of that depth");
    }
    Ok(p_check
        .iter()
        .enumerate()
        .map(|(i, &p)| (p * meinshausen_factor(node_at(i).0, depth, reverse_logic)).min(1.0))
        .collect())
}

/// Hereditary rejection: a node is rejected when it and all its ancestors
/// have `p_adj ≤ α`.
pub fn rejection_set(p_adj: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid("alpha must lie in (0, 1)");
    }
    let n = p_adj.len();
    if n == 0 || !(n + 1).is_power_of_two() {
        return invalid("p-values do not form a full binary tree");
    }
    let mut reject = vec![false; n];
    for i in 0..n {
        let parent_ok = i == 0 || reject[(i - 1) / 2];
        reject[i] = parent_ok && p_adj[i] <= alpha;
    }
    Ok(reject)
}

/// One node of the output tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvalNode {
    pub s: usize,
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
    pub p_tilde: f64,
    pub p_check: f64,
    pub p_adj: f64,
    pub reject: bool,
}

/// Simultaneously valid p-values for every node of the partition tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvalTree {
    pub alpha: f64,
    pub nodes: Vec<PvalNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Settings shared by every pipeline when assembling the output tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjustment {
    pub alpha: f64,
    pub calibration: Calibration,
    pub reverse_logic: bool,
}

impl PvalTree {
    /// Calibrates, adjusts and flags rejections given the observed `p̃`
    /// (level order) and the replicate `p̃` vectors.
    pub fn assemble(
        tree: &PartitionTree,
        observed: &[f64],
        replicates: &[Vec<f64>],
        adj: Adjustment,
    ) -> Result<Self> {
        let depth = tree.levels();
        if observed.len() != node_count(depth) || replicates.iter().any(|r| r.len() != observed.len()) {
            return invalid("p-value vectors do not match the partition tree");
        }
        let p_check: Vec<f64> = match adj.calibration {
            Calibration::Resample => {
                if replicates.is_empty() {
                    return invalid("resampling calibration needs at least one replicate");
                }
                (0..observed.len())
                    .map(|i| {
                        let hits = replicates.iter().filter(|r| r[i] <= observed[i]).count();
                        hits as f64 / replicates.len() as f64
                    })
                    .collect()
            }
            Calibration::Bonferroni => observed
                .iter()
                .enumerate()
                .map(|(i, &p)| bonferroni_calibrate(p, node_at(i).0, depth))
                .collect(),
        };
        let p_adj = meinshausen_adjust(&p_check, depth, adj.reverse_logic)?;
        let reject = rejection_set(&p_adj, adj.alpha)?;
        let nodes = (0..observed.len())
            .map(|i| {
                let (s, j) = node_at(i);
                let (lo, hi) = tree.region(s, j).expect("node inside tree");
                PvalNode {
                    s,
                    j,
                    lo,
                    hi,
                    p_tilde: observed[i],
                    p_check: p_check[i],
                    p_adj: p_adj[i],
                    reject: reject[i],
                }
            })
            .collect();
        Ok(Self { alpha: adj.alpha, nodes, warnings: Vec::new() })
    }

    pub fn node(&self, s: usize, j: usize) -> Option<&PvalNode> {
        self.nodes.iter().find(|n| n.s == s && n.j == j)
    }

    pub fn global(&self) -> &PvalNode {
        &self.nodes[0]
    }

    /// Checks that every rejected node has a rejected parent.
    pub fn is_hereditary(&self) -> bool {
        self.nodes.iter().all(|n| {
            !n.reject || n.s == 0 || self.node(n.s - 1, n.j.div_ceil(2)).is_some_and(|p| p.reject)
        })
    }

    /// Indented text rendering, one node per line, rejected nodes marked `*`.
    pub fn render_text(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for PvalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn walk(tree: &PvalTree, s: usize, j: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let Some(n) = tree.node(s, j) else { return Ok(()) };
            for _ in 0..s {
                f.write_str("  ")?;
            }
            write!(f, "({},{}) [{},{}) p={:.3}", n.s, n.j, n.lo, n.hi, n.p_adj)?;
            if n.reject {
                f.write_str(" *")?;
            }
            f.write_str("\n")?;
            walk(tree, s + 1, 2 * j - 1, f)?;
            walk(tree, s + 1, 2 * j, f)
        }
        walk(self, 0, 1, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Domain;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn e1() -> f64 {
        (-1.0f64).exp()
    }

    #[test]
    fn randomized_examples() {
        assert_abs_diff_eq!(randomized_pvalue(0, 4, 1.0).unwrap(), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(randomized_pvalue(2, 4, 0.5).unwrap(), 0.8125, epsilon = 1e-15);
        assert_abs_diff_eq!(randomized_pvalue(0, 0, 0.7).unwrap(), 0.7, epsilon = 1e-15);
        assert!(randomized_pvalue(5, 4, 0.5).is_err());
    }

    #[test]
    fn combine_examples() {
        assert_abs_diff_eq!(fisher_combine(&[1.0, 1.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fisher_combine(&[e1(), e1()]).unwrap(), 3.0 * (-2.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(fisher_combine(&[0.5]).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(min_combine(&[0.5; 4]).unwrap(), 0.9375, epsilon = 1e-15);
        assert_eq!(min_combine(&[0.0, 0.4, 0.9]).unwrap(), 0.0);
        assert_abs_diff_eq!(min_combine(&[0.3]).unwrap(), 0.3, epsilon = 1e-15);
        assert!(fisher_combine(&[]).is_err());
        assert!(min_combine(&[]).is_err());
        assert!(fisher_combine(&[0.0, 0.5]).unwrap() >= 0.0);
    }

    #[test]
    fn dp_examples() {
        let grid = PvalGrid::new(vec![vec![0.5, 0.5], vec![e1(), e1(), 1.0, 1.0]], None).unwrap();
        let t = dp_all_levels(&grid, Combiner::Fisher);
        assert_abs_diff_eq!(t.get(1, 1, 2).unwrap(), 3.0 * (-2.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(1, 2, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.get(1, 1, 1).unwrap(), 0.5, epsilon = 1e-14);
        assert!(t.get(0, 1, 0).is_err());
        let ones = PvalGrid::new(vec![vec![1.0; 2], vec![1.0; 4], vec![1.0; 8]], Some(1.0)).unwrap();
        for c in [Combiner::Fisher, Combiner::Min] {
            let t = dp_all_levels(&ones, c);
            assert!(t.entries.iter().flatten().all(|&p| (p - 1.0).abs() < 1e-15));
            assert_eq!(t.node(0, 1).unwrap().len(), 4);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(PvalGrid::new(vec![vec![0.5; 3]], None).is_err());
        assert!(PvalGrid::new(vec![vec![0.5, 1.5]], None).is_err());
        assert!(PvalGrid::new(vec![], None).is_err());
    }

    fn naive(grid: &PvalGrid, combiner: Combiner, s: usize, j: usize, r: usize) -> f64 {
        let vals: Vec<f64> = if r == 0 {
            vec![grid.root().unwrap()]
        } else {
            crate::partition::descendants(s, j, r).unwrap().map(|l| grid.level(r)[l - 1]).collect()
        };
        combiner.combine(&vals).unwrap()
    }

    #[test]
    fn dp_matches_direct_combination() {
        let mut rng = crate::rng::stream(11);
        for case in 0..60 {
            let depth = 1 + case % 6;
            let levels = (1..=depth).map(|r| (0..1 << r).map(|_| rng.random::<f64>()).collect()).collect();
            let root = if case % 2 == 0 { Some(rng.random::<f64>()) } else { None };
            let grid = PvalGrid::new(levels, root).unwrap();
            for c in [Combiner::Fisher, Combiner::Min] {
                let table = dp_all_levels(&grid, c);
                for s in 0..=depth {
                    for j in 1..=1 << s {
                        for r in table.first_level(s)..=depth {
                            let d = table.get(s, j, r).unwrap();
                            assert!((d - naive(&grid, c, s, j, r)).abs() <= 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn min_and_calibration_examples() {
        let grid = PvalGrid::new(vec![vec![0.4, 0.9], vec![0.1, 0.9, 0.9, 0.9]], None).unwrap();
        let t = dp_all_levels(&grid, Combiner::Min);
        assert_abs_diff_eq!(min_across_resolutions(&t, 1, 1).unwrap(), 0.4_f64.min(1.0 - 0.9 * 0.9), epsilon = 1e-15);
        assert!(min_across_resolutions(&t, 3, 1).is_err());
        assert_abs_diff_eq!(bonferroni_calibrate(0.01, 0, 4), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(bonferroni_calibrate(0.5, 4, 4), 0.5, epsilon = 1e-15);
        assert_eq!(bonferroni_calibrate(0.9, 0, 4), 1.0);
        assert_eq!(resample_calibrate(0.2, &[0.1, 0.3, 0.5, 0.05]).unwrap(), 0.5);
        assert_eq!(resample_calibrate(0.01, &[0.1, 0.3]).unwrap(), 0.0);
        assert_eq!(resample_calibrate(1.0, &[0.1, 1.0]).unwrap(), 1.0);
        assert!(resample_calibrate(0.5, &[]).is_err());
    }

    #[test]
    fn meinshausen_examples() {
        let mut p = vec![0.01; node_count(3)];
        p[0] = 0.5;
        let adj = meinshausen_adjust(&p, 3, true).unwrap();
        assert_eq!(adj[0], 0.5);
        assert_abs_diff_eq!(adj[node_index(1, 1)], 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(adj[node_index(3, 5)], 0.04, epsilon = 1e-15);
        let adj = meinshausen_adjust(&p, 3, false).unwrap();
        assert_abs_diff_eq!(adj[node_index(3, 5)], 0.08, epsilon = 1e-15);
        assert!(meinshausen_adjust(&p[1..], 3, true).is_err());
    }

    #[test]
    fn rejection_examples() {
        let mut p = vec![1.0; node_count(2)];
        p[node_index(0, 1)] = 0.01;
        p[node_index(1, 1)] = 0.2;
        p[node_index(2, 1)] = 0.01;
        let rej = rejection_set(&p, 0.05).unwrap();
        assert_eq!(rej.iter().filter(|&&r| r).count(), 1);
        assert!(rej[0]);
        assert!(rejection_set(&[1.0; 7], 0.05).unwrap().iter().all(|r| !r));
        assert!(rejection_set(&[0.0; 7], 0.05).unwrap().iter().all(|&r| r));
        assert!(rejection_set(&[0.0; 7], 1.0).is_err());
        assert!(rejection_set(&[0.0; 7], 0.0).is_err());
    }

    #[test]
    fn node_indexing_round_trip() {
        for i in 0..node_count(8) {
            let (s, j) = node_at(i);
            assert_eq!(node_index(s, j), i);
        }
        assert_eq!(node_at(0), (0, 1));
        assert_eq!(node_at(2), (1, 2));
    }

    #[test]
    fn text_rendering() {
        let tree = PartitionTree::equal_width(Domain::unit(), 1).unwrap();
        let t = PvalTree::assemble(
            &tree,
            &[0.5, 0.01, 0.9],
            &[],
            Adjustment { alpha: 0.05, calibration: Calibration::Bonferroni, reverse_logic: true },
        )
        .unwrap();
        let text = t.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "(0,1) [0,1) p=1.000");
        assert_eq!(lines[1], "  (1,1) [0,0.5) p=0.010");
        assert!(t.is_hereditary());
    }

    proptest! {
        #[test]
        fn randomized_dominated_by_tail(m in 0u64..200, frac in 0.0f64..=1.0, u in 0.0f64..=1.0) {
            let a = (frac * m as f64).floor() as u64;
            let p = randomized_pvalue(a, m, u).unwrap();
            let s = binom_two_sided_tail(m, (a as f64 - m as f64 / 2.0).abs()).unwrap();
            prop_assert!(p <= s + 1e-15);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn rejections_are_hereditary(p in proptest::collection::vec(0.0f64..0.2, 15), alpha in 0.01f64..0.2) {
            let rej = rejection_set(&p, alpha).unwrap();
            for i in 1..15 {
                prop_assert!(!rej[i] || rej[(i - 1) / 2]);
            }
        }

        #[test]
        fn adjustment_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, rev in any::<bool>()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let pl = meinshausen_adjust(&[lo; 15], 3, rev).unwrap();
            let ph = meinshausen_adjust(&[hi; 15], 3, rev).unwrap();
            prop_assert!(pl.iter().zip(&ph).all(|(x, y)| x <= y));
            prop_assert!(pl.iter().zip(&[lo; 15]).all(|(x, y)| x >= y));
        }
    }
}
