//! End-to-end network pipelines: symmetric eigenvalue test, degree-corrected
//! signed-polygon test and the bipartite eigenvalue test.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::combine::{dp_all_levels, min_all_nodes, Adjustment, Calibration, Combiner, PvalGrid, PvalTree};
use crate::dists::{Tw1Table, TW1_MEAN, TW1_SD};
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::netstats::{
    asym_statistic, bipartite_top_eigenvalue, centered_top_eigenvalue, mean_sd, sgn_local_pvalue, tw_statistic,
    CountMatrix, SgnKind,
};
use crate::network::{Directedness, LongitudinalNetwork};
use crate::partition::{Domain, PartitionTree};
use crate::resample::{mh_run, uniform_bipartite_resample, uniform_pair_resample, McmcSchedule};
use crate::rng;

/// Per-bin network statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// Centered and scaled largest eigenvalue with Tracy–Widom p-values.
    Eig,
    /// As `Eig`, with location and scale corrected from the null replicates.
    EigBootstrap,
    /// Signed triangle statistic.
    Sgnt,
    /// Signed quadrilateral statistic.
    Sgnq,
    /// Bipartite Gram-matrix largest eigenvalue.
    AsymEig,
}

impl Statistic {
    /// Whether the adjustment uses the `2^{min(s, R-1)}` factor.
    pub fn default_reverse_logic(self) -> bool {
        !matches!(self, Statistic::Sgnt | Statistic::Sgnq)
    }
}

/// Settings of a network run.
#[derive(Debug, Clone)]
pub struct NetworkTestConfig {
    pub statistic: Statistic,
    pub boot: usize,
    pub combiner: Combiner,
    pub alpha: f64,
    pub calibration: Calibration,
    pub include_root_level: bool,
    /// Overrides the statistic's default adjustment logic.
    pub reverse_logic: Option<bool>,
    pub mcmc: McmcSchedule,
    pub seed: u64,
    pub table: Arc<Tw1Table>,
}

impl NetworkTestConfig {
    pub fn new(statistic: Statistic) -> Self {
        Self {
            statistic,
            boot: 200,
            combiner: Combiner::Fisher,
            alpha: 0.05,
            calibration: Calibration::Resample,
            include_root_level: false,
            reverse_logic: None,
            mcmc: McmcSchedule::default(),
            seed: 0,
            table: Arc::new(Tw1Table::bundled()),
        }
    }

    fn reverse_logic(&self) -> bool {
        self.reverse_logic.unwrap_or(self.statistic.default_reverse_logic())
    }
}

/// Contiguous event ranges of every tested bin, in grid order (optional root,
/// then levels `1..=R`, bins left to right).
fn bin_ranges(times: &[f64], tree: &PartitionTree, with_root: bool) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    let first = if with_root { 0 } else { 1 };
    for r in first..=tree.levels() {
        let b = tree.boundaries(r);
        for l in 0..b.len() - 1 {
            let start = times.partition_point(|&t| t < b[l]);
            let end = if l + 2 == b.len() { times.len() } else { times.partition_point(|&t| t < b[l + 1]) };
            out.push((r, l + 1, start, end));
        }
    }
    out
}

struct NetEngine<'a> {
    cfg: &'a NetworkTestConfig,
    shape: (usize, usize),
    bins: Vec<(usize, usize, usize, usize)>,
    depth: usize,
}

impl NetEngine<'_> {
    /// Raw per-bin values: eigenvalues for the eigenvalue statistics,
    /// p-values for the signed-polygon ones; `None` marks a degenerate bin.
    fn raw(&self, marks: &[(u32, u32)]) -> Vec<Option<f64>> {
        let (m, n) = self.shape;
        self.bins
            .iter()
            .map(|&(_, _, a, b)| {
                let slice = &marks[a..b];
                let res = match self.cfg.statistic {
                    Statistic::Eig | Statistic::EigBootstrap => {
                        centered_top_eigenvalue(&CountMatrix::from_pairs(n, slice))
                    }
                    Statistic::Sgnt | Statistic::Sgnq => {
                        let kind = if self.cfg.statistic == Statistic::Sgnt { SgnKind::T } else { SgnKind::Q };
                        sgn_local_pvalue(&CountMatrix::from_pairs(n, slice), kind)
                            .map(|p| (!p.degenerate).then_some(p.p))
                    }
                    Statistic::AsymEig => bipartite_top_eigenvalue(&CountMatrix::from_bipartite_pairs(m, n, slice)),
                };
                res.expect("binned matrices are well formed")
            })
            .collect()
    }

    /// Converts raw values to local p-values.
    fn pvalues(&self, raw: &[Option<f64>], corrections: Option<&[Option<(f64, f64)>]>) -> Vec<f64> {
        let table = &self.cfg.table;
        let (m, n) = self.shape;
        raw.iter()
            .enumerate()
            .map(|(i, v)| {
                let Some(v) = *v else { return 1.0 };
                match self.cfg.statistic {
                    Statistic::Eig => table.two_sided(tw_statistic(n, v)),
                    Statistic::EigBootstrap => match corrections.and_then(|c| c[i]) {
                        Some((mean, sd)) => table.two_sided(TW1_MEAN + TW1_SD * (v - mean) / sd),
                        None => 1.0,
                    },
                    Statistic::Sgnt | Statistic::Sgnq => v,
                    Statistic::AsymEig => table.two_sided(asym_statistic(m, n, v)),
                }
            })
            .collect()
    }

    fn p_tilde(&self, p: &[f64]) -> Vec<f64> {
        let with_root = self.cfg.include_root_level;
        let mut it = p.iter().cloned();
        let root = if with_root { it.next() } else { None };
        let levels = (1..=self.depth).map(|r| (&mut it).take(1 << r).collect()).collect();
        let grid = PvalGrid::new(levels, root).expect("local p-values form a valid grid");
        min_all_nodes(&dp_all_levels(&grid, self.cfg.combiner))
    }
}

/// Replicate marks are drawn by this resampler.
enum Resampler {
    UniformPairs(usize),
    UniformBipartite(usize, usize),
    DegreePreserving,
}

fn run_network<E: Executor>(
    net: &LongitudinalNetwork,
    tree: &PartitionTree,
    cfg: &NetworkTestConfig,
    resampler: Resampler,
    exec: &E,
) -> Result<PvalTree> {
    net.check_tree(tree)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return invalid("alpha must lie in (0, 1)");
    }
    let needs_reps = cfg.calibration == Calibration::Resample || cfg.statistic == Statistic::EigBootstrap;
    if needs_reps && cfg.boot < 1 {
        return invalid("at least one resampling replicate is required");
    }
    if cfg.statistic == Statistic::EigBootstrap && cfg.boot < 2 {
        return invalid("bootstrap correction needs at least two replicates");
    }
    cfg.mcmc.validate()?;
    let times = net.times();
    let observed_marks = net.marks();
    let engine = NetEngine {
        cfg,
        shape: net.shape(),
        bins: bin_ranges(&times, tree, cfg.include_root_level),
        depth: tree.levels(),
    };
    let raw_obs = engine.raw(&observed_marks);
    let n_events = observed_marks.len();
    let raw_reps: Vec<Vec<Option<f64>>> = if !needs_reps {
        Vec::new()
    } else {
        match resampler {
            Resampler::UniformPairs(n) => exec.map(cfg.boot, |b| {
                let mut s = rng::child_stream(cfg.seed, b as u64 + 1);
                engine.raw(&uniform_pair_resample(n_events, n, &mut s).expect("validated node count"))
            }),
            Resampler::UniformBipartite(m, n) => exec.map(cfg.boot, |b| {
                let mut s = rng::child_stream(cfg.seed, b as u64 + 1);
                engine.raw(&uniform_bipartite_resample(n_events, m, n, &mut s).expect("validated node count"))
            }),
            Resampler::DegreePreserving if cfg.mcmc.independent_chains => exec.map(cfg.boot, |b| {
                let mut s = rng::child_stream(cfg.seed, b as u64 + 1);
                let mut marks = observed_marks.clone();
                mh_run(&mut marks, cfg.mcmc.burnin_steps(n_events), &mut s);
                engine.raw(&marks)
            }),
            Resampler::DegreePreserving => {
                let mut s = rng::child_stream(cfg.seed, 1);
                let mut marks = observed_marks.clone();
                mh_run(&mut marks, cfg.mcmc.burnin_steps(n_events), &mut s);
                let thin = cfg.mcmc.thin_steps(n_events);
                let mut out = Vec::with_capacity(cfg.boot);
                const CHUNK: usize = 32;
                while out.len() < cfg.boot {
                    let take = CHUNK.min(cfg.boot - out.len());
                    let states: Vec<Vec<(u32, u32)>> = (0..take)
                        .map(|_| {
                            mh_run(&mut marks, thin, &mut s);
                            marks.clone()
                        })
                        .collect();
                    out.extend(exec.map(take, |i| engine.raw(&states[i])));
                }
                out
            }
        }
    };
    let corrections: Option<Vec<Option<(f64, f64)>>> = (cfg.statistic == Statistic::EigBootstrap).then(|| {
        (0..engine.bins.len())
            .map(|i| {
                let vals: Vec<f64> = raw_reps.iter().filter_map(|r| r[i]).collect();
                mean_sd(&vals)
            })
            .collect()
    });
    let corr = corrections.as_deref();
    let p_obs = engine.pvalues(&raw_obs, corr);
    let observed = engine.p_tilde(&p_obs);
    let replicates: Vec<Vec<f64>> = if cfg.calibration == Calibration::Resample {
        exec.map(raw_reps.len(), |b| engine.p_tilde(&engine.pvalues(&raw_reps[b], corr)))
    } else {
        Vec::new()
    };
    let mut out = PvalTree::assemble(
        tree,
        &observed,
        &replicates,
        Adjustment { alpha: cfg.alpha, calibration: cfg.calibration, reverse_logic: cfg.reverse_logic() },
    )?;
    for (i, &(r, l, _, _)) in engine.bins.iter().enumerate() {
        let degenerate = raw_obs[i].is_none() || (corr.is_some_and(|c| c[i].is_none()));
        if degenerate {
            out.warnings.push(format!("bin ({r},{l}) is degenerate; its local p-value was set to 1"));
        }
    }
    Ok(out)
}

fn check_stat(cfg: &NetworkTestConfig, allowed: &[Statistic]) -> Result<()> {
    if allowed.contains(&cfg.statistic) {
        Ok(())
    } else {
        Err(Error::Config(format!("statistic {:?} is not available for this test", cfg.statistic)))
    }
}

/// Symmetric network test with eigenvalue statistics and uniform-pair
/// calibration.
pub fn run_symmetric<E: Executor>(
    net: &LongitudinalNetwork,
    tree: &PartitionTree,
    cfg: &NetworkTestConfig,
    exec: &E,
) -> Result<PvalTree> {
    check_stat(cfg, &[Statistic::Eig, Statistic::EigBootstrap])?;
    let Directedness::Symmetric { n } = net.directedness() else {
        return invalid("symmetric test needs a symmetric network");
    };
    run_network(net, tree, cfg, Resampler::UniformPairs(n), exec)
}

/// Degree-corrected test with signed-polygon statistics and
/// degree-preserving MCMC calibration.
pub fn run_degree_corrected<E: Executor>(
    net: &LongitudinalNetwork,
    tree: &PartitionTree,
    cfg: &NetworkTestConfig,
    exec: &E,
) -> Result<PvalTree> {
    check_stat(cfg, &[Statistic::Sgnt, Statistic::Sgnq])?;
    if !net.is_symmetric() {
        return invalid("degree-corrected test needs a symmetric network");
    }
    run_network(net, tree, cfg, Resampler::DegreePreserving, exec)
}

/// Bipartite network test with the Gram-matrix eigenvalue statistic and
/// uniform bipartite calibration.
pub fn run_asymmetric<E: Executor>(
    net: &LongitudinalNetwork,
    tree: &PartitionTree,
    cfg: &NetworkTestConfig,
    exec: &E,
) -> Result<PvalTree> {
    check_stat(cfg, &[Statistic::AsymEig])?;
    let Directedness::Bipartite { m, n } = net.directedness() else {
        return invalid("asymmetric test needs a bipartite network");
    };
    if m < 2 || n < 2 {
        return invalid("bipartite test needs at least two nodes on each side");
    }
    run_network(net, tree, cfg, Resampler::UniformBipartite(m, n), exec)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

fn connected(nodes: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut uf = UnionFind((0..nodes).collect());
    let mut components = nodes;
    for (a, b) in edges {
        if uf.union(a, b) {
            components -= 1;
        }
    }
    components <= 1
}

/// Depth for a network test on an equal-width partition: the largest
/// `R ≤ max_levels` whose level-`R` bins all carry connected graphs, or
/// failing that the largest with no empty bin (at least 1).
pub fn default_network_levels(net: &LongitudinalNetwork, domain: Domain, max_levels: usize) -> Result<usize> {
    let max_levels = max_levels.clamp(1, crate::partition::MAX_LEVELS);
    let tree = PartitionTree::equal_width(domain, max_levels)?;
    let times = net.times();
    let (m, n) = net.shape();
    let (nodes, offset) = if net.is_symmetric() { (n, 0) } else { (m + n, m) };
    let marks = net.marks();
    let mut fallback = None;
    for r in (1..=max_levels).rev() {
        let b = tree.boundaries(r);
        let mut all_connected = true;
        let mut none_empty = true;
        for l in 0..b.len() - 1 {
            let start = times.partition_point(|&t| t < b[l]);
            let end = if l + 2 == b.len() { times.len() } else { times.partition_point(|&t| t < b[l + 1]) };
            if start == end {
                none_empty = false;
                all_connected = false;
                break;
            }
            let edges = marks[start..end].iter().map(|&(u, v)| (u as usize, v as usize + offset));
            if !connected(nodes, edges) {
                all_connected = false;
            }
        }
        if all_connected {
            return Ok(r);
        }
        if none_empty && fallback.is_none() {
            fallback = Some(r);
        }
    }
    Ok(fallback.unwrap_or(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::network::NetEvent;
    use crate::pointproc::poisson_count;
    use rand::Rng;

    fn null_network(n: usize, rate: f64, seed: u64) -> LongitudinalNetwork {
        let mut rng = rng::stream(seed);
        let mut events = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                for _ in 0..poisson_count(rate, &mut rng) {
                    events.push(NetEvent { u, v, t: rng.random() });
                }
            }
        }
        LongitudinalNetwork::from_events(Directedness::Symmetric { n }, Domain::unit(), events).unwrap()
    }

    #[test]
    fn bin_ranges_are_contiguous() {
        let times = [0.1, 0.2, 0.5, 0.6, 0.99];
        let tree = PartitionTree::equal_width(Domain::unit(), 2).unwrap();
        let bins = bin_ranges(&times, &tree, true);
        assert_eq!(bins[0], (0, 1, 0, 5));
        assert_eq!(bins[1], (1, 1, 0, 2));
        assert_eq!(bins[2], (1, 2, 2, 5));
        assert_eq!(bins[3], (2, 1, 0, 2));
        assert_eq!(bins[6], (2, 4, 4, 5));
    }

    #[test]
    fn empty_network_gives_unit_pvalues() {
        let net = LongitudinalNetwork::symmetric(5, Domain::unit(), &[]).unwrap();
        let tree = PartitionTree::equal_width(Domain::unit(), 2).unwrap();
        let cfg = NetworkTestConfig { boot: 10, ..NetworkTestConfig::new(Statistic::Eig) };
        let t = run_symmetric(&net, &tree, &cfg, &Sequential).unwrap();
        assert!(t.nodes.iter().all(|n| n.p_tilde == 1.0 && n.p_adj == 1.0 && !n.reject));
        assert_eq!(t.warnings.len(), 6);
        let bip = LongitudinalNetwork::bipartite(3, 3, Domain::unit(), &[]).unwrap();
        let cfg = NetworkTestConfig { boot: 10, ..NetworkTestConfig::new(Statistic::AsymEig) };
        let t = run_asymmetric(&bip, &tree, &cfg, &Sequential).unwrap();
        assert!(t.nodes.iter().all(|n| n.p_adj == 1.0));
    }

    #[test]
    fn statistic_must_match_pipeline() {
        let net = null_network(6, 1.0, 1);
        let tree = PartitionTree::equal_width(Domain::unit(), 1).unwrap();
        let cfg = NetworkTestConfig { boot: 5, ..NetworkTestConfig::new(Statistic::Sgnq) };
        assert!(matches!(run_symmetric(&net, &tree, &cfg, &Sequential), Err(Error::Config(_))));
        assert!(run_asymmetric(&net, &tree, &NetworkTestConfig::new(Statistic::AsymEig), &Sequential).is_err());
    }

    #[test]
    fn pipelines_are_deterministic() {
        let net = null_network(20, 2.0, 2);
        let tree = PartitionTree::equal_width(Domain::unit(), 2).unwrap();
        for stat in [Statistic::Eig, Statistic::EigBootstrap, Statistic::Sgnt, Statistic::Sgnq] {
            let cfg = NetworkTestConfig { boot: 20, seed: 5, ..NetworkTestConfig::new(stat) };
            let run = |c: &NetworkTestConfig| {
                if matches!(stat, Statistic::Sgnt | Statistic::Sgnq) {
                    run_degree_corrected(&net, &tree, c, &Sequential).unwrap()
                } else {
                    run_symmetric(&net, &tree, c, &Sequential).unwrap()
                }
            };
            let (a, b) = (run(&cfg), run(&cfg));
            assert_eq!(a, b);
            assert!(a.is_hereditary());
            let mut ind = cfg.clone();
            ind.mcmc.independent_chains = true;
            assert!(run(&ind).is_hereditary());
        }
    }

    #[test]
    fn default_levels_prefers_connected_bins() {
        let net = null_network(10, 8.0, 3);
        let r = default_network_levels(&net, Domain::unit(), 6).unwrap();
        assert!((1..=6).contains(&r));
        let sparse = LongitudinalNetwork::symmetric(4, Domain::unit(), &[(1, 2, 0.1), (3, 4, 0.9)]).unwrap();
        assert_eq!(default_network_levels(&sparse, Domain::unit(), 4).unwrap(), 1);
    }
}
