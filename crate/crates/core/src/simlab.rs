//! Simulation designs, baseline two-sample tests (Gaussian kernel and
//! conditional Kolmogorov–Smirnov) and Monte Carlo experiment runners.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::combine::{Combiner, PvalTree};
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::longitudinal::{run_asymmetric, run_degree_corrected, run_symmetric, NetworkTestConfig, Statistic};
use crate::netstats::{centered_top_eigenvalue, sgn_stats, tw_statistic, bootstrap_corrected, CountMatrix};
use crate::network::{Directedness, LongitudinalNetwork, NetEvent};
use crate::partition::{Domain, PartitionTree};
use crate::pointproc::{poisson_count, sample_poisson, Intensity, PointPattern};
use crate::resample::uniform_pair_counts;
use crate::rng;
use crate::twosample::{fill_rademacher, pool, run_pooled, MarkedPool, TwoSampleConfig};

/// Named pairs of intensities for two-sample simulations on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwoSampleScenario {
    /// Both rates 40.
    NullUniform,
    /// Both `40 (sin(2πx) + 1)`.
    NullSine,
    /// Both `40 · Beta(2, 5)` density.
    NullBeta,
    /// Rate 50 against `50((1-p) on [0,1/4], (1+p) on (1/4,1/2], 1 on (1/2,1])`.
    Piecewise { p: f64 },
    /// Rate 550 against `550 + 275 sin(4π(x - 1/4))` on `[1/4, 3/4]`.
    Illustrative,
    /// Rate `base` against `base` on `[0, 1/2]` and `base (1 + lift)` above.
    HalfShift { base: f64, lift: f64 },
}

impl TwoSampleScenario {
    pub fn intensities(&self) -> (Intensity, Intensity) {
        match *self {
            Self::NullUniform => (Intensity::Constant(40.0), Intensity::Constant(40.0)),
            Self::NullSine => {
                let s = Intensity::Sinusoid { base: 40.0, amp: 40.0, freq: 1.0, shift: 0.0, window: (0.0, 1.0) };
                (s.clone(), s)
            }
            Self::NullBeta => {
                let b = Intensity::ScaledBeta { total: 40.0, a: 2.0, b: 5.0 };
                (b.clone(), b)
            }
            Self::Piecewise { p } => (
                Intensity::Constant(50.0),
                Intensity::Piecewise {
                    breaks: vec![0.0, 0.25, 0.5, 1.0],
                    rates: vec![50.0 * (1.0 - p), 50.0 * (1.0 + p), 50.0],
                },
            ),
            Self::Illustrative => (
                Intensity::Constant(550.0),
                Intensity::Sinusoid { base: 550.0, amp: 275.0, freq: 2.0, shift: 0.25, window: (0.25, 0.75) },
            ),
            Self::HalfShift { base, lift } => (
                Intensity::Constant(base),
                Intensity::Piecewise { breaks: vec![0.0, 0.5, 1.0], rates: vec![base, base * (1.0 + lift)] },
            ),
        }
    }
}

impl fmt::Display for TwoSampleScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NullUniform => f.write_str("null-uniform"),
            Self::NullSine => f.write_str("null-sine"),
            Self::NullBeta => f.write_str("null-beta"),
            Self::Piecewise { p } => write!(f, "piecewise:{p}"),
            Self::Illustrative => f.write_str("illustrative"),
            Self::HalfShift { base, lift } => write!(f, "half-shift:{base}:{lift}"),
        }
    }
}

fn parse_params(rest: Option<&str>, expected: usize, name: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = match rest {
        Some(r) if !r.is_empty() => r
            .split(':')
            .map(|x| x.parse::<f64>().map_err(|_| Error::Config(format!("bad parameter '{x}' in scenario {name}"))))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    if vals.len() != expected {
        return Err(Error::Config(format!("scenario {name} takes {expected} parameter(s)")));
    }
    Ok(vals)
}

impl FromStr for TwoSampleScenario {
    type Err = Error;

    /// Parses `null-uniform`, `null-sine`, `null-beta`, `piecewise:<p>`,
    /// `illustrative` and `half-shift:<base>:<lift>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        Ok(match name {
            "null-uniform" => Self::NullUniform,
            "null-sine" => Self::NullSine,
            "null-beta" => Self::NullBeta,
            "illustrative" => Self::Illustrative,
            "piecewise" => Self::Piecewise { p: parse_params(rest, 1, name)?[0] },
            "half-shift" => {
                let v = parse_params(rest, 2, name)?;
                Self::HalfShift { base: v[0], lift: v[1] }
            }
            _ => return Err(Error::Config(format!("unknown two-sample scenario '{s}'"))),
        })
    }
}

/// Draws both samples of a two-sample scenario on `[0, 1)`.
pub fn gen_two_sample_scenario<R: Rng + ?Sized>(
    scenario: &TwoSampleScenario,
    rng: &mut R,
) -> Result<(PointPattern, PointPattern)> {
    if let TwoSampleScenario::Piecewise { p } = scenario {
        if !(0.0..=1.0).contains(p) {
            return invalid("piecewise signal strength must lie in [0, 1]");
        }
    }
    let (a, b) = scenario.intensities();
    Ok((sample_poisson(&a, Domain::unit(), rng)?, sample_poisson(&b, Domain::unit(), rng)?))
}

/// How node activity parameters are generated in the degree-corrected model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heterogeneity {
    /// `θ̃_u ~ Unif(2, 3)`.
    Moderate,
    /// `θ̃_u = √u`.
    Severe,
    /// `θ̃_u = u`.
    Linear,
}

/// Named network designs on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkScenario {
    /// `K` equal blocks; within-block rate `s` flat in time, between-block
    /// rate `s · Beta(2, 5)` density.
    Sbm { n: usize, k: usize, s: f64 },
    /// Two blocks; pair rate `θ_u θ_v s · Beta(2, 5)` within blocks and `p`
    /// times that between, with `‖θ‖ = s`.
    Dcsbm { n: usize, het: Heterogeneity, s: f64, p: f64 },
    /// Every pair at flat rate `gamma`.
    NullPoisson { n: usize, gamma: f64 },
    /// Bipartite `m × n`, every pair at flat rate `gamma`.
    NullBipartite { m: usize, n: usize, gamma: f64 },
    /// Bipartite with two row and two column blocks; rate `gamma` on
    /// matching blocks and `ratio · gamma` otherwise.
    BipartiteBlocks { m: usize, n: usize, gamma: f64, ratio: f64 },
}

impl fmt::Display for NetworkScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sbm { n, k, s } => write!(f, "sbm:{n}:{k}:{s}"),
            Self::Dcsbm { n, het, s, p } => {
                let h = match het {
                    Heterogeneity::Moderate => "moderate",
                    Heterogeneity::Severe => "severe",
                    Heterogeneity::Linear => "linear",
                };
                write!(f, "dcsbm:{n}:{h}:{s}:{p}")
            }
            Self::NullPoisson { n, gamma } => write!(f, "null-poisson:{n}:{gamma}"),
            Self::NullBipartite { m, n, gamma } => write!(f, "null-bipartite:{m}:{n}:{gamma}"),
            Self::BipartiteBlocks { m, n, gamma, ratio } => write!(f, "bipartite-blocks:{m}:{n}:{gamma}:{ratio}"),
        }
    }
}

impl FromStr for NetworkScenario {
    type Err = Error;

    /// Parses `sbm:<n>:<K>:<s>`, `dcsbm:<n>:<moderate|severe|linear>:<s>:<p>`,
    /// `null-poisson:<n>:<gamma>`, `null-bipartite:<m>:<n>:<gamma>` and
    /// `bipartite-blocks:<m>:<n>:<gamma>:<ratio>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("malformed network scenario '{s}'"));
        let num = |i: usize| parts.get(i).ok_or_else(bad)?.parse::<f64>().map_err(|_| bad());
        let int = |i: usize| parts.get(i).ok_or_else(bad)?.parse::<usize>().map_err(|_| bad());
        let arity = |k: usize| if parts.len() == k { Ok(()) } else { Err(bad()) };
        Ok(match parts[0] {
            "sbm" => {
                arity(4)?;
                Self::Sbm { n: int(1)?, k: int(2)?, s: num(3)? }
            }
            "dcsbm" => {
                arity(5)?;
                let het = match parts[2] {
                    "moderate" => Heterogeneity::Moderate,
                    "severe" => Heterogeneity::Severe,
                    "linear" => Heterogeneity::Linear,
                    _ => return Err(bad()),
                };
                Self::Dcsbm { n: int(1)?, het, s: num(3)?, p: num(4)? }
            }
            "null-poisson" => {
                arity(3)?;
                Self::NullPoisson { n: int(1)?, gamma: num(2)? }
            }
            "null-bipartite" => {
                arity(4)?;
                Self::NullBipartite { m: int(1)?, n: int(2)?, gamma: num(3)? }
            }
            "bipartite-blocks" => {
                arity(5)?;
                Self::BipartiteBlocks { m: int(1)?, n: int(2)?, gamma: num(3)?, ratio: num(4)? }
            }
            _ => return Err(Error::Config(format!("unknown network scenario '{s}'"))),
        })
    }
}

/// Normalized activity parameters `θ_u = s θ̃_u / ‖θ̃‖`.
pub fn degree_parameters<R: Rng + ?Sized>(n: usize, het: Heterogeneity, s: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n)
        .map(|u| match het {
            Heterogeneity::Moderate => 2.0 + rng.random::<f64>(),
            Heterogeneity::Severe => (u as f64).sqrt(),
            Heterogeneity::Linear => u as f64,
        })
        .collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.iter().map(|x| s * x / norm).collect()
}

/// Event-time shape for one pair.
#[derive(Clone, Copy)]
enum Shape {
    Flat,
    Beta25,
}

fn draw_times<R: Rng + ?Sized>(count: u64, shape: Shape, beta: &Beta<f64>, rng: &mut R, out: &mut Vec<f64>) {
    for _ in 0..count {
        let t = match shape {
            Shape::Flat => rng.random::<f64>(),
            Shape::Beta25 => beta.sample(rng),
        };
        out.push(t.min(1.0 - f64::EPSILON / 2.0));
    }
}

/// Draws a network from a named design. Pair `(u, v)` gets a Poisson number
/// of events with the design's mean and i.i.d. times from its shape.
pub fn gen_network_scenario<R: Rng + ?Sized>(scenario: &NetworkScenario, rng: &mut R) -> Result<LongitudinalNetwork> {
    let beta = Beta::new(2.0, 5.0).expect("valid shape");
    let mut events = Vec::new();
    let mut times = Vec::new();
    let mut emit = |u: u32, v: u32, mean: f64, shape: Shape, rng: &mut R| {
        times.clear();
        draw_times(poisson_count(mean, rng), shape, &beta, rng, &mut times);
        events.extend(times.iter().map(|&t| NetEvent { u, v, t }));
    };
    let directedness = match *scenario {
        NetworkScenario::Sbm { n, k, s } => {
            if n < 2 || k < 1 || k > n || !(s >= 0.0) {
                return invalid("sbm needs n >= 2, 1 <= K <= n and s >= 0");
            }
            let block = |u: usize| u * k / n;
            for u in 0..n {
                for v in u + 1..n {
                    let shape = if block(u) == block(v) { Shape::Flat } else { Shape::Beta25 };
                    emit(u as u32, v as u32, s, shape, rng);
                }
            }
            Directedness::Symmetric { n }
        }
        NetworkScenario::Dcsbm { n, het, s, p } => {
            if n < 2 || !(s >= 0.0) || !(p >= 0.0) {
                return invalid("dcsbm needs n >= 2, s >= 0 and p >= 0");
            }
            let theta = degree_parameters(n, het, s, rng);
            for u in 0..n {
                for v in u + 1..n {
                    let same = (u < n / 2) == (v < n / 2);
                    let mean = s * theta[u] * theta[v] * if same { 1.0 } else { p };
                    emit(u as u32, v as u32, mean, Shape::Beta25, rng);
                }
            }
            Directedness::Symmetric { n }
        }
        NetworkScenario::NullPoisson { n, gamma } => {
            if n < 2 || !(gamma >= 0.0) {
                return invalid("null-poisson needs n >= 2 and gamma >= 0");
            }
            for u in 0..n {
                for v in u + 1..n {
                    emit(u as u32, v as u32, gamma, Shape::Flat, rng);
                }
            }
            Directedness::Symmetric { n }
        }
        NetworkScenario::NullBipartite { m, n, gamma } => {
            if m < 1 || n < 1 || !(gamma >= 0.0) {
                return invalid("null-bipartite needs nonempty sides and gamma >= 0");
            }
            for u in 0..m {
                for v in 0..n {
                    emit(u as u32, v as u32, gamma, Shape::Flat, rng);
                }
            }
            Directedness::Bipartite { m, n }
        }
        NetworkScenario::BipartiteBlocks { m, n, gamma, ratio } => {
            if m < 2 || n < 2 || !(gamma >= 0.0) || !(ratio >= 0.0) {
                return invalid("bipartite-blocks needs two nodes per side and nonnegative rates");
            }
            for u in 0..m {
                for v in 0..n {
                    let same = (u < m / 2) == (v < n / 2);
                    emit(u as u32, v as u32, if same { gamma } else { gamma * ratio }, Shape::Flat, rng);
                }
            }
            Directedness::Bipartite { m, n }
        }
    };
    LongitudinalNetwork::from_events(directedness, Domain::unit(), events)
}

/// Expected number of events of a network design (given `θ` for the
/// degree-corrected design).
pub fn expected_events(scenario: &NetworkScenario, theta: Option<&[f64]>) -> f64 {
    match *scenario {
        NetworkScenario::Sbm { n, s, .. } => s * (n * (n - 1) / 2) as f64,
        NetworkScenario::NullPoisson { n, gamma } => gamma * (n * (n - 1) / 2) as f64,
        NetworkScenario::NullBipartite { m, n, gamma } => gamma * (m * n) as f64,
        NetworkScenario::BipartiteBlocks { m, n, gamma, ratio } => {
            let (m1, n1) = (m / 2, n / 2);
            let same = m1 * n1 + (m - m1) * (n - n1);
            gamma * same as f64 + gamma * ratio * (m * n - same) as f64
        }
        NetworkScenario::Dcsbm { n, s, p, .. } => {
            let theta = theta.expect("degree parameters required");
            let mut total = 0.0;
            for u in 0..n {
                for v in u + 1..n {
                    let same = (u < n / 2) == (v < n / 2);
                    total += s * theta[u] * theta[v] * if same { 1.0 } else { p };
                }
            }
            total
        }
    }
}

/// Gaussian-kernel two-sample test `T = Σ_{i≠j} K(X_i, X_j) M_i M_j`.
pub struct KernelTest {
    kernel: Vec<f64>,
    n: usize,
}

impl KernelTest {
    pub fn new(positions: &[f64], sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return invalid("kernel bandwidth must be positive");
        }
        let n = positions.len();
        let c = 1.0 / (2.0 * sigma * sigma);
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = positions[i] - positions[j];
                    kernel[i * n + j] = (-(d * d) * c).exp();
                }
            }
        }
        Ok(Self { kernel, n })
    }

    pub fn statistic(&self, marks: &[i8]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let row = &self.kernel[i * self.n..(i + 1) * self.n];
            let s: f64 = row.iter().zip(marks).map(|(k, &m)| k * m as f64).sum();
            total += s * marks[i] as f64;
        }
        total
    }
}

/// Monte Carlo p-value of the kernel test: fraction of Rademacher-mark
/// replicates with `|T*| ≥ |T|`.
pub fn kernel_two_sample<R: Rng + ?Sized>(pool: &MarkedPool, sigma: f64, boot: usize, rng: &mut R) -> Result<f64> {
    if boot < 1 {
        return invalid("at least one replicate is required");
    }
    if pool.len() < 2 {
        return Ok(1.0);
    }
    let test = KernelTest::new(pool.positions(), sigma)?;
    let observed = test.statistic(pool.marks()).abs();
    let mut marks = vec![0i8; pool.len()];
    let mut hits = 0;
    for _ in 0..boot {
        fill_rademacher(&mut marks, rng);
        if test.statistic(&marks).abs() >= observed * (1.0 - 1e-12) {
            hits += 1;
        }
    }
    Ok(hits as f64 / boot as f64)
}

/// Two-sample Kolmogorov–Smirnov distance between the `-1` and `+1` marked
/// positions of a sorted pool; `None` when either side is empty.
pub fn ks_statistic(positions: &[f64], marks: &[i8]) -> Option<f64> {
    let na = marks.iter().filter(|&&m| m < 0).count();
    let nb = marks.len() - na;
    if na == 0 || nb == 0 {
        return None;
    }
    let (mut ca, mut cb, mut d) = (0usize, 0usize, 0.0f64);
    let mut i = 0;
    while i < positions.len() {
        let x = positions[i];
        while i < positions.len() && positions[i] == x {
            if marks[i] < 0 { ca += 1 } else { cb += 1 }
            i += 1;
        }
        d = d.max((ca as f64 / na as f64 - cb as f64 / nb as f64).abs());
    }
    Some(d)
}

/// Conditional KS test: Monte Carlo p-value over Rademacher replicates on the
/// pooled positions.
pub fn ks_two_sample<R: Rng + ?Sized>(pool: &MarkedPool, boot: usize, rng: &mut R) -> Result<f64> {
    if boot < 1 {
        return invalid("at least one replicate is required");
    }
    let Some(observed) = ks_statistic(pool.positions(), pool.marks()) else { return Ok(1.0) };
    let mut marks = vec![0i8; pool.len()];
    let mut hits = 0;
    for _ in 0..boot {
        fill_rademacher(&mut marks, rng);
        if ks_statistic(pool.positions(), &marks).unwrap_or(0.0) >= observed - 1e-12 {
            hits += 1;
        }
    }
    Ok(hits as f64 / boot as f64)
}

/// Two-sample testing methods compared in simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Multiscale test with Fisher combination.
    MF,
    /// Multiscale test with minimum combination.
    MM,
    /// Gaussian kernel test, bandwidth 0.5.
    KN1,
    /// Gaussian kernel test, bandwidth 0.1.
    KN2,
    /// Conditional Kolmogorov–Smirnov test.
    KS,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::MF, Method::MM, Method::KN1, Method::KN2, Method::KS];

    pub fn name(self) -> &'static str {
        match self {
            Method::MF => "MF",
            Method::MM => "MM",
            Method::KN1 => "KN1",
            Method::KN2 => "KN2",
            Method::KS => "KS",
        }
    }
}

/// Global p-value of `method` on one pooled sample, using an equal-width
/// partition of `[0, 1)` with `levels` levels.
pub fn two_sample_global_pvalue<E: Executor>(
    method: Method,
    pooled: &MarkedPool,
    levels: usize,
    boot: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    let mut stream = rng::stream(seed);
    match method {
        Method::MF | Method::MM => {
            let tree = PartitionTree::equal_width(pooled.domain(), levels)?;
            let combiner = if method == Method::MF { Combiner::Fisher } else { Combiner::Min };
            let cfg = TwoSampleConfig { boot, combiner, seed, ..TwoSampleConfig::default() };
            Ok(run_pooled(pooled, &tree, &cfg, exec)?.global().p_adj)
        }
        Method::KN1 => kernel_two_sample(pooled, 0.5, boot, &mut stream),
        Method::KN2 => kernel_two_sample(pooled, 0.1, boot, &mut stream),
        Method::KS => ks_two_sample(pooled, boot, &mut stream),
    }
}

/// A Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub design: Design,
    pub reps: usize,
    pub boot: usize,
    pub alphas: Vec<f64>,
    pub levels: usize,
    pub seed: u64,
}

/// What an experiment simulates and which tests it applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    TwoSample { scenario: TwoSampleScenario, methods: Vec<Method> },
    Network { scenario: NetworkScenario, statistic: Statistic },
}

/// Rejection proportion of one method at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub method: String,
    pub alpha: f64,
    pub rejections: usize,
    pub reps: usize,
    pub rate: f64,
    pub se: f64,
}

/// Experiment output: its settings and one row per
/// (method, alpha).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,method,alpha,rejections,reps,rate,se\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.scenario, r.method, r.alpha, r.rejections, r.reps, r.rate, r.se
            ));
        }
        out
    }

    pub fn rate(&self, method: &str, alpha: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method && r.alpha == alpha).map(|r| r.rate)
    }
}

fn statistic_name(s: Statistic) -> &'static str {
    match s {
        Statistic::Eig => "eig",
        Statistic::EigBootstrap => "eig-bootstrap",
        Statistic::Sgnt => "sgnt",
        Statistic::Sgnq => "sgnq",
        Statistic::AsymEig => "asym-eig",
    }
}

/// Runs a network test on one simulated network and returns its tree.
pub fn run_network_test<E: Executor>(
    net: &LongitudinalNetwork,
    tree: &PartitionTree,
    cfg: &NetworkTestConfig,
    exec: &E,
) -> Result<PvalTree> {
    match cfg.statistic {
        Statistic::Eig | Statistic::EigBootstrap => run_symmetric(net, tree, cfg, exec),
        Statistic::Sgnt | Statistic::Sgnq => run_degree_corrected(net, tree, cfg, exec),
        Statistic::AsymEig => run_asymmetric(net, tree, cfg, exec),
    }
}

/// Runs an experiment; repetition `i` uses child stream `i` of the seed, so
/// results do not depend on the executor.
pub fn run_experiment<E: Executor>(spec: &ExperimentSpec, exec: &E) -> Result<ExperimentReport> {
    if spec.reps < 1 || spec.boot < 1 {
        return invalid("an experiment needs at least one repetition and one replicate");
    }
    if spec.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) || spec.alphas.is_empty() {
        return invalid("alpha levels must lie in (0, 1)");
    }
    let (scenario, methods): (String, Vec<String>) = match &spec.design {
        Design::TwoSample { scenario, methods } => {
            (scenario.to_string(), methods.iter().map(|m| m.name().to_string()).collect())
        }
        Design::Network { scenario, statistic } => (scenario.to_string(), vec![statistic_name(*statistic).to_string()]),
    };
    let tree = PartitionTree::equal_width(Domain::unit(), spec.levels)?;
    let results: Vec<Result<Vec<f64>>> = exec.map(spec.reps, |i| {
        let rep_seed = rng::derive_seed(spec.seed, i as u64);
        let mut stream = rng::stream(rep_seed);
        match &spec.design {
            Design::TwoSample { scenario, methods } => {
                let (a, b) = gen_two_sample_scenario(scenario, &mut stream)?;
                let pooled = pool(&a, &b)?;
                methods
                    .iter()
                    .enumerate()
                    .map(|(k, &m)| {
                        let s = rng::derive_seed(rep_seed, k as u64 + 1);
                        two_sample_global_pvalue(m, &pooled, spec.levels, spec.boot, s, &crate::exec::Sequential)
                    })
                    .collect()
            }
            Design::Network { scenario, statistic } => {
                let net = gen_network_scenario(scenario, &mut stream)?;
                let cfg = NetworkTestConfig {
                    boot: spec.boot,
                    seed: rng::derive_seed(rep_seed, 1),
                    ..NetworkTestConfig::new(*statistic)
                };
                Ok(vec![run_network_test(&net, &tree, &cfg, &crate::exec::Sequential)?.global().p_adj])
            }
        }
    });
    let pvals: Vec<Vec<f64>> = results.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, method) in methods.iter().enumerate() {
        for &alpha in &spec.alphas {
            let rejections = pvals.iter().filter(|p| p[k] <= alpha).count();
            let rate = rejections as f64 / spec.reps as f64;
            rows.push(ReportRow {
                scenario: scenario.clone(),
                method: method.clone(),
                alpha,
                rejections,
                reps: spec.reps,
                rate,
                se: (rate * (1.0 - rate) / spec.reps as f64).sqrt(),
            });
        }
    }
    Ok(ExperimentReport { spec: spec.clone(), rows })
}

/// One null draw of the eigenvalue statistic, raw and bootstrap-corrected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwDraw {
    pub raw: f64,
    pub corrected: f64,
}

/// Null draws of `n^{2/3}(λ₁(Ã) - 2)` for `n` nodes with Poisson(`rate`)
/// pair counts, each with a bootstrap correction from `boot` uniform-pair
/// replicates of the same total count.
pub fn tw_calibration_sample<E: Executor>(
    n: usize,
    rate: f64,
    draws: usize,
    boot: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<TwDraw>> {
    if n < 2 || boot < 2 || !(rate > 0.0) {
        return invalid("calibration needs n >= 2, at least two replicates and a positive rate");
    }
    let out: Vec<Result<TwDraw>> = exec.map(draws, |i| {
        let mut stream = rng::child_stream(seed, i as u64);
        let mut pairs = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                for _ in 0..poisson_count(rate, &mut stream) {
                    pairs.push((u, v));
                }
            }
        }
        let a = CountMatrix::from_pairs(n, &pairs);
        let total = pairs.len() as u64;
        let degenerate = || Error::InvalidArgument("empty simulated matrix".to_string());
        let lambda = centered_top_eigenvalue(&a)?.ok_or_else(degenerate)?;
        let mut reps = Vec::with_capacity(boot);
        for _ in 0..boot {
            let r = uniform_pair_counts(total, n, &mut stream)?;
            reps.push(centered_top_eigenvalue(&r)?.ok_or_else(degenerate)?);
        }
        let corrected = bootstrap_corrected(lambda, &reps).ok_or_else(degenerate)?;
        Ok(TwDraw { raw: tw_statistic(n, lambda), corrected })
    });
    out.into_iter().collect()
}

/// Standardized signed triangle and quadrilateral statistics of static
/// two-block degree-corrected networks with `A_uv ~ Poisson(θ_u θ_v)` within
/// blocks and `Poisson(p θ_u θ_v)` between; `p = 1` is the null.
pub fn signed_polygon_null_sample<E: Executor>(
    n: usize,
    het: Heterogeneity,
    s: f64,
    p: f64,
    draws: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<(f64, f64)>> {
    let out: Vec<Result<(f64, f64)>> = exec.map(draws, |i| {
        let mut stream = rng::child_stream(seed, i as u64);
        let theta = degree_parameters(n, het, s, &mut stream);
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let same = (u < n / 2) == (v < n / 2);
                for _ in 0..poisson_count(theta[u] * theta[v] * if same { 1.0 } else { p }, &mut stream) {
                    pairs.push((u as u32, v as u32));
                }
            }
        }
        let stats = sgn_stats(&CountMatrix::from_pairs(n, &pairs))?
            .ok_or_else(|| Error::InvalidArgument("empty simulated matrix".to_string()))?;
        match (stats.z_t(), stats.z_q()) {
            (Some(t), Some(q)) => Ok((t, q)),
            _ => invalid("degenerate simulated matrix"),
        }
    });
    out.into_iter().collect()
}

/// Node count of the desk-scale signed-polygon null design.
pub const DESK_POLYGON_NODES: usize = 300;
/// Sparsity of the desk-scale signed-polygon null design; `s / n` matches
/// the 1000-node, `s = 100` design.
pub const DESK_POLYGON_SPARSITY: f64 = 30.0;

/// Monte Carlo effort: reduced desk presets or full-size runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Desk,
    Full,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale '{s}'"))),
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["type-one", "power", "array-sparsity", "dc-power"];

/// Named experiment suites. `type-one` runs the three null cases, `power`
/// the piecewise alternative over `p`, `array-sparsity` the block model over
/// `K` and `s`, and `dc-power` the degree-corrected model over heterogeneity,
/// statistic and `p`.
pub fn preset(name: &str, scale: Scale, seed: u64) -> Result<Vec<ExperimentSpec>> {
    let desk = scale == Scale::Desk;
    let spec = |design: Design, reps: usize, boot: usize, alphas: &[f64], levels: usize| ExperimentSpec {
        design,
        reps,
        boot,
        alphas: alphas.to_vec(),
        levels,
        seed,
    };
    let methods = Method::ALL.to_vec();
    Ok(match name {
        "type-one" => [TwoSampleScenario::NullUniform, TwoSampleScenario::NullSine, TwoSampleScenario::NullBeta]
            .into_iter()
            .map(|scenario| {
                let design = Design::TwoSample { scenario, methods: methods.clone() };
                if desk { spec(design, 300, 200, &[0.05, 0.1, 0.25], 3) } else { spec(design, 2000, 500, &[0.05, 0.1, 0.25], 3) }
            })
            .collect(),
        "power" => [0.2, 0.4, 0.6, 0.8, 1.0]
            .into_iter()
            .map(|p| {
                let design = Design::TwoSample { scenario: TwoSampleScenario::Piecewise { p }, methods: methods.clone() };
                if desk { spec(design, 300, 200, &[0.01, 0.05, 0.1], 3) } else { spec(design, 1000, 500, &[0.01, 0.05, 0.1], 3) }
            })
            .collect(),
        "array-sparsity" => {
            let mut out = Vec::new();
            for k in [2, 3] {
                for s in [1.0, 0.5, 0.25, 0.175, 0.1] {
                    let design = Design::Network { scenario: NetworkScenario::Sbm { n: 200, k, s }, statistic: Statistic::Eig };
                    let alphas = [0.01, 0.05, 0.1, 0.25];
                    out.push(if desk { spec(design, 50, 200, &alphas, 4) } else { spec(design, 200, 400, &alphas, 4) });
                }
            }
            out
        }
        "dc-power" => {
            let mut out = Vec::new();
            for het in [Heterogeneity::Moderate, Heterogeneity::Severe] {
                for statistic in [Statistic::Sgnt, Statistic::Sgnq] {
                    for p in [0.6, 0.7, 0.8, 0.9, 1.0] {
                        let design = Design::Network { scenario: NetworkScenario::Dcsbm { n: 100, het, s: 12.0, p }, statistic };
                        let alphas = [0.01, 0.05, 0.1, 0.25];
                        out.push(if desk { spec(design, 50, 200, &alphas, 4) } else { spec(design, 100, 400, &alphas, 4) });
                    }
                }
            }
            out
        }
        _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
    })
}

/// Equal-width histogram of `values` over `[lo, hi)` as CSV
/// (`left,right,count`).
pub fn histogram_csv(values: &[f64], lo: f64, hi: f64, bins: usize) -> String {
    let mut counts = vec![0usize; bins];
    let w = (hi - lo) / bins as f64;
    for &v in values {
        if v >= lo && v < hi {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    let mut out = String::from("left,right,count\n");
    for (i, c) in counts.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", lo + w * i as f64, lo + w * (i + 1) as f64, c));
    }
    out
}
