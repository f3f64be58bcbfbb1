//! Argument definitions and subcommand orchestration.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multiscale_core::dists::Tw1Table;
use multiscale_core::longitudinal::{
    default_network_levels, run_asymmetric, run_degree_corrected, run_symmetric, NetworkTestConfig, Statistic,
};
use multiscale_core::resample::McmcSchedule;
use multiscale_core::simlab::{
    self, Design, ExperimentReport, ExperimentSpec, Heterogeneity, Method, NetworkScenario, Scale, TwoSampleScenario,
};
use multiscale_core::twosample::{default_levels, run_two_sample, TwoSampleConfig};
use multiscale_core::{Calibration, Combiner, Domain, LongitudinalNetwork, PartitionTree, PvalTree};
use serde::Serialize;

use crate::config::{CalibrationArg, CombineArg, FileConfig, PartitionMode, StatArg};
use crate::error::{CliError, CliResult};
use crate::exec::RayonExecutor;
use crate::input::{self, Events};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "multiscale", version, about = "Multiscale binning tests for point processes and longitudinal networks")]
pub struct Cli {
    /// JSON configuration file; command-line flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether two samples (`t,sample` CSV) share one intensity.
    TwoSample(TestArgs),
    /// Symmetric network test with the eigenvalue statistic.
    NetworkSym(NetArgs),
    /// Degree-corrected network test with signed-polygon statistics.
    NetworkDc(NetArgs),
    /// Bipartite network test (`# bipartite m n` header).
    NetworkAsym(NetArgs),
    /// Run a simulation design or a named experiment suite.
    Simulate(SimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Input CSV file.
    pub input: PathBuf,
    /// Number of resolution levels R.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Resampling replicates B.
    #[arg(long)]
    pub boot: Option<usize>,
    #[arg(long, value_enum)]
    pub combine: Option<CombineArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub partition: Option<PartitionMode>,
    #[arg(long, value_enum)]
    pub calibration: Option<CalibrationArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add the single-bin level to the global node's combination.
    #[arg(long)]
    pub include_root_level: bool,
    /// Domain override `lo,hi` (default: from the data).
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    pub domain: Option<(f64, f64)>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report, or the indented text tree.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    #[command(flatten)]
    pub test: TestArgs,
    #[arg(long, value_enum)]
    pub stat: Option<StatArg>,
    /// Correct eigenvalue statistics with the null replicates' mean and sd.
    #[arg(long)]
    pub bootstrap_correct: bool,
    #[arg(long)]
    pub mcmc_burnin_factor: Option<f64>,
    #[arg(long)]
    pub mcmc_thin_factor: Option<f64>,
    /// One fresh chain per replicate instead of one thinned chain.
    #[arg(long)]
    pub mcmc_independent_chains: bool,
    /// Force the adjustment factor logic (`true`: 2^min(s,R-1), `false`: 2^s).
    #[arg(long)]
    pub reverse_logic: Option<bool>,
    /// Tracy–Widom CDF table (`x,cdf` CSV) replacing the bundled one.
    #[arg(long)]
    pub tw_table: Option<PathBuf>,
    /// Largest R considered when choosing the depth from the data.
    #[arg(long)]
    pub max_levels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// A suite (type-one, power, array-sparsity, dc-power), a histogram dump
    /// (tw-histogram, sgn-histogram) or a single design such as
    /// `piecewise:0.6` or `dcsbm:100:moderate:12:0.6`.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub boot: Option<usize>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, value_enum)]
    pub stat: Option<StatArg>,
    #[arg(long, default_value = "desk", value_parser = parse_scale)]
    pub scale: Scale,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; a `.csv` extension selects CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_domain(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected 'lo,hi'")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

fn parse_scale(s: &str) -> Result<Scale, String> {
    s.parse::<Scale>().map_err(|e| e.to_string())
}

/// Settings shared by all single-run subcommands after merging.
struct Common {
    levels: Option<usize>,
    boot: Option<usize>,
    combiner: Combiner,
    alpha: f64,
    partition: PartitionMode,
    calibration: Calibration,
    seed: u64,
    include_root_level: bool,
    domain: Option<(f64, f64)>,
}

fn merge_common(args: &TestArgs, file: &FileConfig) -> CliResult<Common> {
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::config("alpha must lie in (0, 1)"));
    }
    let levels = args.levels.or(file.levels);
    if levels == Some(0) {
        return Err(CliError::config("levels must be at least 1"));
    }
    let boot = args.boot.or(file.boot);
    if boot == Some(0) {
        return Err(CliError::config("boot must be at least 1"));
    }
    Ok(Common {
        levels,
        boot,
        combiner: args.combine.or(file.combine).unwrap_or(CombineArg::Fisher).into(),
        alpha,
        partition: args.partition.or(file.partition).unwrap_or(PartitionMode::EqualWidth),
        calibration: args.calibration.or(file.calibration).unwrap_or(CalibrationArg::Resample).into(),
        seed: args.seed.or(file.seed).unwrap_or(0),
        include_root_level: args.include_root_level || file.include_root_level.unwrap_or(false),
        domain: args.domain.or(file.domain.map(|[lo, hi]| (lo, hi))),
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_events(path: &Path) -> CliResult<Events> {
    input::parse_events(&read_text(path)?, &path.display().to_string())
}

fn build_tree(mode: PartitionMode, positions: &[f64], domain: Domain, levels: usize) -> CliResult<PartitionTree> {
    Ok(match mode {
        PartitionMode::EqualWidth => PartitionTree::equal_width(domain, levels)?,
        PartitionMode::EqualCount => {
            let mut sorted = positions.to_vec();
            sorted.sort_by(f64::total_cmp);
            PartitionTree::equal_count(&sorted, domain, levels)?
        }
    })
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, body: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn emit_tree(
    test: &str,
    seed: u64,
    boot: usize,
    tree: &PartitionTree,
    pvals: &PvalTree,
    args: &TestArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let text = report::render_text(pvals);
    for w in &pvals.warnings {
        writeln!(stderr, "warning: {w}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    match args.format {
        Format::Json => {
            emit(&args.out, stdout, &report::to_json(&report::TestReport { test, seed, boot, partition: tree, result: pvals })?)?;
            stderr.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Text => emit(&args.out, stdout, &text),
    }
}

/// Parses `args` and runs the selected subcommand.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let exec = RayonExecutor::new(cli.threads.or(file.threads))?;
    match &cli.command {
        Command::TwoSample(args) => two_sample(args, &file, &exec, stdout, stderr),
        Command::NetworkSym(args) => network(args, &file, NetKind::Symmetric, &exec, stdout, stderr),
        Command::NetworkDc(args) => network(args, &file, NetKind::DegreeCorrected, &exec, stdout, stderr),
        Command::NetworkAsym(args) => network(args, &file, NetKind::Asymmetric, &exec, stdout, stderr),
        Command::Simulate(args) => simulate(args, &exec, stdout, stderr),
    }
}

fn two_sample(
    args: &TestArgs,
    file: &FileConfig,
    exec: &RayonExecutor,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let common = merge_common(args, file)?;
    let events = read_events(&args.input)?;
    let times = events.times();
    let domain = input::infer_domain(&times, common.domain)?;
    let (a, b) = input::two_patterns(&events, domain)?;
    let levels = common.levels.unwrap_or_else(|| default_levels(times.len()));
    let tree = build_tree(common.partition, &times, domain, levels)?;
    let cfg = TwoSampleConfig {
        boot: common.boot.unwrap_or(TwoSampleConfig::default().boot),
        combiner: common.combiner,
        alpha: common.alpha,
        calibration: common.calibration,
        include_root_level: common.include_root_level,
        seed: common.seed,
    };
    let result = run_two_sample(&a, &b, &tree, &cfg, exec)?;
    emit_tree("two-sample", cfg.seed, cfg.boot, &tree, &result, args, stdout, stderr)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum NetKind {
    Symmetric,
    DegreeCorrected,
    Asymmetric,
}

fn load_table(path: &Path) -> CliResult<Tw1Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read TW table {}: {e}", path.display())))?;
    Tw1Table::from_csv(&text).map_err(|e| CliError::config(format!("TW table {}: {e}", path.display())))
}

fn network(
    args: &NetArgs,
    file: &FileConfig,
    kind: NetKind,
    exec: &RayonExecutor,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let common = merge_common(&args.test, file)?;
    let default_stat = match kind {
        NetKind::Symmetric => StatArg::Eig,
        NetKind::DegreeCorrected => StatArg::Sgnq,
        NetKind::Asymmetric => StatArg::AsymEig,
    };
    let stat = args.stat.or(file.stat).unwrap_or(default_stat);
    let bootstrap_correct = args.bootstrap_correct || file.bootstrap_correct.unwrap_or(false);
    if bootstrap_correct && stat != StatArg::Eig {
        return Err(CliError::config("--bootstrap-correct applies to the eig statistic only"));
    }
    let mcmc = McmcSchedule {
        burnin_factor: args.mcmc_burnin_factor.or(file.mcmc.burnin_factor).unwrap_or(McmcSchedule::default().burnin_factor),
        thin_factor: args.mcmc_thin_factor.or(file.mcmc.thin_factor).unwrap_or(McmcSchedule::default().thin_factor),
        independent_chains: args.mcmc_independent_chains || file.mcmc.independent_chains.unwrap_or(false),
    };
    mcmc.validate().map_err(|e| CliError::config(e.to_string()))?;
    let table = match args.tw_table.as_ref().or(file.tw_table.as_ref()) {
        Some(path) => load_table(path)?,
        None => Tw1Table::bundled(),
    };
    let max_levels = args.max_levels.or(file.max_levels).unwrap_or(6);
    if max_levels == 0 {
        return Err(CliError::config("max-levels must be at least 1"));
    }

    let events = read_events(&args.test.input)?;
    let times = events.times();
    let domain = input::infer_domain(&times, common.domain)?;
    let net: LongitudinalNetwork = input::network(&events, domain)?;
    let levels = match common.levels {
        Some(r) => r,
        None => default_network_levels(&net, domain, max_levels)?,
    };
    let tree = build_tree(common.partition, &times, domain, levels)?;
    let mut cfg = NetworkTestConfig::new(stat.statistic(bootstrap_correct));
    if let Some(b) = common.boot {
        cfg.boot = b;
    }
    cfg.combiner = common.combiner;
    cfg.alpha = common.alpha;
    cfg.calibration = common.calibration;
    cfg.include_root_level = common.include_root_level;
    cfg.reverse_logic = args.reverse_logic.or(file.reverse_logic);
    cfg.mcmc = mcmc;
    cfg.seed = common.seed;
    cfg.table = Arc::new(table);
    let (name, result) = match kind {
        NetKind::Symmetric => ("network-sym", run_symmetric(&net, &tree, &cfg, exec)?),
        NetKind::DegreeCorrected => ("network-dc", run_degree_corrected(&net, &tree, &cfg, exec)?),
        NetKind::Asymmetric => ("network-asym", run_asymmetric(&net, &tree, &cfg, exec)?),
    };
    emit_tree(name, cfg.seed, cfg.boot, &tree, &result, &args.test, stdout, stderr)
}

/// Statistic a single network design is tested with unless `--stat` says otherwise.
fn default_statistic(scenario: &NetworkScenario) -> Statistic {
    match scenario {
        NetworkScenario::Dcsbm { .. } => Statistic::Sgnq,
        NetworkScenario::NullBipartite { .. } | NetworkScenario::BipartiteBlocks { .. } => Statistic::AsymEig,
        _ => Statistic::Eig,
    }
}

fn single_design(scenario: &str, stat: Option<StatArg>) -> CliResult<Design> {
    if let Ok(s) = scenario.parse::<TwoSampleScenario>() {
        return Ok(Design::TwoSample { scenario: s, methods: Method::ALL.to_vec() });
    }
    let s: NetworkScenario = scenario.parse()?;
    let statistic = stat.map(|x| x.statistic(false)).unwrap_or_else(|| default_statistic(&s));
    Ok(Design::Network { scenario: s, statistic })
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    scale: Scale,
    experiments: &'a [ExperimentReport],
}

fn simulate(args: &SimArgs, exec: &RayonExecutor, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    if args.reps == Some(0) || args.boot == Some(0) || args.levels == Some(0) {
        return Err(CliError::config("reps, boot and levels must be at least 1"));
    }
    if let Some(alphas) = &args.alpha {
        if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(CliError::config("alpha levels must lie in (0, 1)"));
        }
    }
    let seed = args.seed.unwrap_or(0);
    let csv = args.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    match args.scenario.as_str() {
        "tw-histogram" => return tw_histogram(args, seed, csv, exec, stdout, stderr),
        "sgn-histogram" => return sgn_histogram(args, seed, csv, exec, stdout, stderr),
        _ => {}
    }
    let mut specs = if simlab::PRESETS.contains(&args.scenario.as_str()) {
        simlab::preset(&args.scenario, args.scale, seed)?
    } else {
        let full = args.scale == Scale::Full;
        vec![ExperimentSpec {
            design: single_design(&args.scenario, args.stat)?,
            reps: if full { 1000 } else { 300 },
            boot: if full { 500 } else { 200 },
            alphas: vec![0.01, 0.05, 0.1],
            levels: 3,
            seed,
        }]
    };
    for spec in &mut specs {
        if let Some(r) = args.reps {
            spec.reps = r;
        }
        if let Some(b) = args.boot {
            spec.boot = b;
        }
        if let Some(a) = &args.alpha {
            spec.alphas = a.clone();
        }
        if let Some(l) = args.levels {
            spec.levels = l;
        }
        if let (Some(stat), Design::Network { statistic, .. }) = (args.stat, &mut spec.design) {
            *statistic = stat.statistic(false);
        }
    }
    let mut reports = Vec::with_capacity(specs.len());
    for spec in &specs {
        let r = simlab::run_experiment(spec, exec)?;
        for row in &r.rows {
            writeln!(stderr, "{} {} alpha={} rate={:.3} se={:.3}", row.scenario, row.method, row.alpha, row.rate, row.se)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        reports.push(r);
    }
    let body = if csv {
        let mut out = String::new();
        for (i, r) in reports.iter().enumerate() {
            let text = r.to_csv();
            out.push_str(if i == 0 { &text } else { text.split_once('\n').map_or("", |x| x.1) });
        }
        out
    } else {
        report::to_json(&SimulationOutput { scale: args.scale, experiments: &reports })?
    };
    emit(&args.out, stdout, &body)
}

#[derive(Serialize)]
struct TwDump {
    n: usize,
    rate: f64,
    boot: usize,
    seed: u64,
    draws: Vec<simlab::TwDraw>,
}

fn tw_histogram(
    args: &SimArgs,
    seed: u64,
    csv: bool,
    exec: &RayonExecutor,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let (n, rate) = (300, 20.0);
    let draws = args.reps.unwrap_or(if args.scale == Scale::Full { 1000 } else { 500 });
    let boot = args.boot.unwrap_or(50);
    let sample = simlab::tw_calibration_sample(n, rate, draws, boot, seed, exec)?;
    let table = Tw1Table::bundled();
    let raw: Vec<f64> = sample.iter().map(|d| d.raw).collect();
    let corrected: Vec<f64> = sample.iter().map(|d| d.corrected).collect();
    writeln!(
        stderr,
        "raw: mean={:.3} ks={:.3}; corrected: mean={:.3} ks={:.3}",
        report::mean(&raw),
        report::ks_distance(&raw, |x| table.cdf(x)),
        report::mean(&corrected),
        report::ks_distance(&corrected, |x| table.cdf(x)),
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    let body = if csv {
        let mut out = String::from("draw,raw,corrected\n");
        for (i, d) in sample.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", d.raw, d.corrected));
        }
        out
    } else {
        report::to_json(&TwDump { n, rate, boot, seed, draws: sample })?
    };
    emit(&args.out, stdout, &body)
}

#[derive(Serialize)]
struct SgnRow {
    p: f64,
    z_t: f64,
    z_q: f64,
}

#[derive(Serialize)]
struct SgnDump {
    n: usize,
    s: f64,
    seed: u64,
    draws: Vec<SgnRow>,
}

fn sgn_histogram(
    args: &SimArgs,
    seed: u64,
    csv: bool,
    exec: &RayonExecutor,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let (n, s, default_draws) = match args.scale {
        Scale::Desk => (simlab::DESK_POLYGON_NODES, simlab::DESK_POLYGON_SPARSITY, 500),
        Scale::Full => (1000, 100.0, 2000),
    };
    let draws = args.reps.unwrap_or(default_draws);
    let mut rows = Vec::new();
    for (k, p) in [0.95, 0.975, 1.0].into_iter().enumerate() {
        let stream_seed = seed.wrapping_add(k as u64);
        let sample = simlab::signed_polygon_null_sample(n, Heterogeneity::Linear, s, p, draws, stream_seed, exec)?;
        let zt: Vec<f64> = sample.iter().map(|x| x.0).collect();
        let zq: Vec<f64> = sample.iter().map(|x| x.1).collect();
        let phi = multiscale_core::dists::normal_cdf;
        writeln!(
            stderr,
            "p={p}: z_t mean={:.3} ks={:.3}; z_q mean={:.3} ks={:.3}",
            report::mean(&zt),
            report::ks_distance(&zt, phi),
            report::mean(&zq),
            report::ks_distance(&zq, phi),
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
        rows.extend(sample.into_iter().map(|(z_t, z_q)| SgnRow { p, z_t, z_q }));
    }
    let body = if csv {
        let mut out = String::from("p,z_t,z_q\n");
        for r in &rows {
            out.push_str(&format!("{},{},{}\n", r.p, r.z_t, r.z_q));
        }
        out
    } else {
        report::to_json(&SgnDump { n, s, seed, draws: rows })?
    };
    emit(&args.out, stdout, &body)
}
