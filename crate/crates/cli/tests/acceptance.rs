//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! `ACCEPTANCE <k> PASS|FAIL` line before asserting.

use std::collections::BTreeMap;
use std::io::Write;

use multiscale::report::{ks_distance, mean, to_json, TestReport};
use multiscale::RayonExecutor;
use multiscale_core::combine::{dp_all_levels, fisher_combine, min_combine, randomized_pvalue, Combiner, PvalGrid};
use multiscale_core::dists::{chi2_survival, Tw1Table, TW1_MEAN};
use multiscale_core::longitudinal::{NetworkTestConfig, Statistic};
use multiscale_core::netstats::{sgn_stats, CountMatrix};
use multiscale_core::resample::{degree_vector, mh_run, mh_step};
use multiscale_core::rng::{derive_seed, stream};
use multiscale_core::simlab::{
    gen_network_scenario, gen_two_sample_scenario, run_experiment, run_network_test, signed_polygon_null_sample,
    tw_calibration_sample, Design, ExperimentSpec, Heterogeneity, Method, NetworkScenario, TwoSampleScenario,
};
use multiscale_core::twosample::{pool, run_pooled, TwoSampleConfig};
use multiscale_core::{Domain, PartitionTree, PvalTree, Sequential};
use rand::Rng;

fn verdict(k: u32, pass: bool, detail: String) {
    let line = format!("ACCEPTANCE {k} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {k} failed: {detail}");
}

/// `P(|X - m/2| ≥ t)` for `X ~ Bin(m, 1/2)` by direct summation.
fn binom_tail_oracle(m: u64, t: f64) -> f64 {
    let mut pmf = 0.5f64.powi(m as i32);
    let mut total = 0.0;
    for k in 0..=m {
        if (k as f64 - m as f64 / 2.0).abs() >= t - 1e-9 {
            total += pmf;
        }
        pmf *= (m - k) as f64 / (k + 1) as f64;
    }
    total.min(1.0)
}

/// Standard normal CDF from the Abramowitz–Stegun 7.1.26 erf approximation.
fn normal_cdf_oracle(z: f64) -> f64 {
    let x = z.abs() / 2f64.sqrt();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let erf = 1.0 - poly * (-x * x).exp();
    if z >= 0.0 { 0.5 * (1.0 + erf) } else { 0.5 * (1.0 - erf) }
}

#[test]
fn criterion_01_randomized_pvalue_exactness() {
    let mut rng = stream(101);
    let mut worst = 0.0f64;
    let mut dominated = true;
    for m in [1u64, 5, 20, 101] {
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let a = (0..m).filter(|_| rng.random::<bool>()).count() as u64;
                let u: f64 = rng.random();
                let p = randomized_pvalue(a, m, u).unwrap();
                dominated &= p <= binom_tail_oracle(m, (a as f64 - m as f64 / 2.0).abs()) + 1e-12;
                p
            })
            .collect();
        let ks = ks_distance(&draws, |x| x.clamp(0.0, 1.0));
        worst = worst.max(ks);
    }
    verdict(1, worst < 0.01 && dominated, format!("max KS {worst:.4}, randomized <= exact tail in all draws: {dominated}"));
}

#[test]
fn criterion_02_dp_matches_direct_recomputation() {
    let mut rng = stream(202);
    let mut worst = 0.0f64;
    for g in 0..100 {
        let depth = 1 + g % 6;
        let levels: Vec<Vec<f64>> = (1..=depth).map(|r| (0..1 << r).map(|_| rng.random_range(1e-6..1.0)).collect()).collect();
        let root = (g % 2 == 0).then(|| rng.random_range(1e-6..1.0));
        let grid = PvalGrid::new(levels.clone(), root).unwrap();
        for combiner in [Combiner::Fisher, Combiner::Min] {
            let table = dp_all_levels(&grid, combiner);
            for s in 0..=depth {
                for j in 1..=1usize << s {
                    let first = if s == 0 && root.is_some() { 0 } else { s.max(1) };
                    for r in first..=depth {
                        let block: Vec<f64> = if r == 0 {
                            vec![root.unwrap()]
                        } else {
                            let width = 1 << (r - s);
                            levels[r - 1][(j - 1) * width..j * width].to_vec()
                        };
                        let direct = match combiner {
                            // Even-df chi-square survival: P Σ_{i<k} (-ln P)^i / i!.
                            Combiner::Fisher => {
                                let y: f64 = block.iter().map(|p| -p.ln()).sum();
                                let (mut term, mut acc) = (1.0, 0.0);
                                for i in 0..block.len() {
                                    acc += term;
                                    term *= y / (i + 1) as f64;
                                }
                                (-y).exp() * acc
                            }
                            Combiner::Min => {
                                let m = block.iter().cloned().fold(1.0, f64::min);
                                1.0 - (1.0 - m).powi(block.len() as i32)
                            }
                        };
                        let got = table.get(s, j, r).unwrap();
                        let reference = match combiner {
                            Combiner::Fisher => fisher_combine(&block).unwrap(),
                            Combiner::Min => min_combine(&block).unwrap(),
                        };
                        worst = worst.max((got - direct).abs()).max((got - reference).abs());
                    }
                }
            }
        }
    }
    verdict(2, worst <= 1e-12, format!("max abs deviation {worst:.2e} over 100 grids"));
}

#[test]
fn criterion_03_two_sample_type_one_error() {
    let spec = ExperimentSpec {
        design: Design::TwoSample { scenario: TwoSampleScenario::NullUniform, methods: Method::ALL.to_vec() },
        reps: 500,
        boot: 200,
        alphas: vec![0.05],
        levels: 3,
        seed: 303,
    };
    let report = run_experiment(&spec, &Sequential).unwrap();
    let rates: Vec<(String, f64)> = report.rows.iter().map(|r| (r.method.clone(), r.rate)).collect();
    let pass = rates.iter().all(|(_, r)| (0.02..=0.08).contains(r));
    verdict(3, pass, format!("rejection rates at 0.05: {rates:?}"));
}

#[test]
fn criterion_04_fwer_on_true_local_nulls() {
    let scenario = TwoSampleScenario::HalfShift { base: 50.0, lift: 0.6 };
    let tree = PartitionTree::equal_width(Domain::unit(), 3).unwrap();
    let nulls: Vec<(usize, usize)> = vec![(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (3, 4)];
    let sims = 500;
    let mut errors = 0;
    let mut hereditary = true;
    for i in 0..sims {
        let seed = derive_seed(404, i);
        let (a, b) = gen_two_sample_scenario(&scenario, &mut stream(seed)).unwrap();
        let cfg = TwoSampleConfig { boot: 200, seed, ..TwoSampleConfig::default() };
        let out = run_pooled(&pool(&a, &b).unwrap(), &tree, &cfg, &Sequential).unwrap();
        hereditary &= out.is_hereditary();
        if nulls.iter().any(|&(s, j)| out.node(s, j).unwrap().reject) {
            errors += 1;
        }
    }
    let fwer = errors as f64 / sims as f64;
    verdict(4, fwer <= 0.07 && hereditary, format!("FWER on true local nulls {fwer:.3} over {sims} sims"));
}

#[test]
fn criterion_05_two_sample_power_ordering() {
    let mut mf = Vec::new();
    let mut kn1 = 0.0;
    let reps = 300;
    for p in [0.2, 0.6, 1.0] {
        let spec = ExperimentSpec {
            design: Design::TwoSample { scenario: TwoSampleScenario::Piecewise { p }, methods: vec![Method::MF, Method::KN1] },
            reps,
            boot: 200,
            alphas: vec![0.05],
            levels: 3,
            seed: 505,
        };
        let report = run_experiment(&spec, &Sequential).unwrap();
        mf.push(report.rate("MF", 0.05).unwrap());
        kn1 = report.rate("KN1", 0.05).unwrap();
    }
    let noise = |x: f64| 2.0 * (x * (1.0 - x) / reps as f64).sqrt().max(1.0 / reps as f64);
    let monotone = mf.windows(2).all(|w| w[1] >= w[0] - noise(w[0]).max(noise(w[1])));
    let pass = monotone && mf[2] >= kn1 + 0.1 && mf[2] >= 0.8;
    verdict(5, pass, format!("MF power at p = 0.2, 0.6, 1.0: {mf:?}; KN1 at p = 1: {kn1:.3}"));
}

#[test]
fn criterion_06_tw_calibration() {
    let draws = tw_calibration_sample(300, 20.0, 500, 50, 606, &Sequential).unwrap();
    let table = Tw1Table::bundled();
    let raw: Vec<f64> = draws.iter().map(|d| d.raw).collect();
    let corrected: Vec<f64> = draws.iter().map(|d| d.corrected).collect();
    let ks = ks_distance(&corrected, |x| table.cdf(x));
    let shift = mean(&raw) - TW1_MEAN;
    verdict(
        6,
        ks < 0.08 && shift.abs() > 0.2,
        format!("corrected KS {ks:.4}, raw mean shift {shift:.3}, raw KS {:.4}", ks_distance(&raw, |x| table.cdf(x))),
    );
}

fn network_rate(scenario: NetworkScenario, statistic: Statistic, seed: u64) -> f64 {
    let spec = ExperimentSpec {
        design: Design::Network { scenario, statistic },
        reps: 50,
        boot: 200,
        alphas: vec![0.05],
        levels: 4,
        seed,
    };
    run_experiment(&spec, &Sequential).unwrap().rows[0].rate
}

#[test]
fn criterion_07_symmetric_array_power() {
    let strong = network_rate(NetworkScenario::Sbm { n: 200, k: 2, s: 1.0 }, Statistic::Eig, 707);
    let weak = network_rate(NetworkScenario::Sbm { n: 200, k: 2, s: 0.1 }, Statistic::Eig, 708);
    verdict(7, strong >= 0.95 && weak <= 0.25, format!("rejection rate s=1: {strong:.2}, s=0.1: {weak:.2}"));
}

#[test]
fn criterion_08_signed_polygon_null_normality() {
    let sample = signed_polygon_null_sample(300, Heterogeneity::Linear, 30.0, 1.0, 500, 808, &Sequential).unwrap();
    let zt: Vec<f64> = sample.iter().map(|x| x.0).collect();
    let zq: Vec<f64> = sample.iter().map(|x| x.1).collect();
    let (kt, kq) = (ks_distance(&zt, normal_cdf_oracle), ks_distance(&zq, normal_cdf_oracle));
    verdict(
        8,
        kt < 0.08 && kq < 0.08,
        format!("KS z_T {kt:.4} (mean {:.3}), KS z_Q {kq:.4} (mean {:.3})", mean(&zt), mean(&zq)),
    );
}

#[test]
fn criterion_09_degree_corrected_level_and_power() {
    let dc = |p: f64, seed: u64| {
        network_rate(NetworkScenario::Dcsbm { n: 100, het: Heterogeneity::Moderate, s: 12.0, p }, Statistic::Sgnq, seed)
    };
    let power = dc(0.6, 909);
    let level = dc(1.0, 910);
    verdict(9, power >= 0.9 && level <= 0.12, format!("power at p=0.6: {power:.2}, level at p=1: {level:.2}"));
}

fn sgnq_oracle(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let v: f64 = a.iter().flatten().sum();
    let eta: Vec<f64> = a.iter().map(|row| row.iter().sum::<f64>() / v.sqrt()).collect();
    let m = |i: usize, j: usize| a[i][j] - eta[i] * eta[j];
    let mut q = 0.0;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            for k in (0..n).filter(|&k| k != i && k != j) {
                for l in (0..n).filter(|&l| l != i && l != j && l != k) {
                    q += m(i, j) * m(j, k) * m(k, l) * m(l, i);
                }
            }
        }
    }
    q
}

#[test]
fn criterion_10_mcmc_and_sgnq() {
    let mut rng = stream(1010);
    let mut marks: Vec<(u32, u32)> = (0..200)
        .map(|_| {
            let u = rng.random_range(0..30u32);
            let v = (u + rng.random_range(1..30u32)) % 30;
            (u.min(v), u.max(v))
        })
        .collect();
    let degrees = degree_vector(&marks, 30);
    let mut preserved = true;
    for _ in 0..100_000 {
        mh_step(&mut marks, &mut rng).unwrap();
        preserved &= degree_vector(&marks, 30) == degrees;
    }

    let start = vec![(0u32, 1u32), (2, 3), (0, 2)];
    let d = degree_vector(&start, 4);
    let pairs: Vec<(u32, u32)> = (0..4u32).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
    let mut states: Vec<Vec<(u32, u32)>> = Vec::new();
    for &x in &pairs {
        for &y in &pairs {
            for &z in &pairs {
                let s = vec![x, y, z];
                if degree_vector(&s, 4) == d {
                    states.push(s);
                }
            }
        }
    }
    let mut counts: BTreeMap<Vec<(u32, u32)>, u64> = states.iter().map(|s| (s.clone(), 0)).collect();
    let mut m = start;
    let thin = 10;
    for _ in 0..1_000_000 / thin {
        mh_run(&mut m, thin as u64, &mut rng);
        *counts.get_mut(&m).expect("chain stays in the degree class") += 1;
    }
    let total: u64 = counts.values().sum();
    let expected = total as f64 / states.len() as f64;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = chi2_survival(states.len() as u64 - 1, chi2);

    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 200 {
        let n = rng.random_range(4..=12usize);
        let mut a = vec![vec![0.0; n]; n];
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let c = if rng.random::<f64>() < 0.5 { rng.random_range(0..4u32) } else { 0 };
                a[u][v] = c as f64;
                a[v][u] = c as f64;
                pairs.extend(std::iter::repeat_n((u as u32, v as u32), c as usize));
            }
        }
        let Some(stats) = sgn_stats(&CountMatrix::from_pairs(n, &pairs)).unwrap() else { continue };
        let oracle = sgnq_oracle(&a);
        worst = worst.max((stats.q - oracle).abs() / oracle.abs().max(1.0));
        checked += 1;
    }
    verdict(
        10,
        preserved && p > 0.001 && worst < 1e-8,
        format!("degrees preserved: {preserved}; chi-square p {p:.4} over {} states; SgnQ max rel err {worst:.2e}", states.len()),
    );
}

fn report_json(tree: &PvalTree, partition: &PartitionTree, seed: u64) -> String {
    to_json(&TestReport { test: "acceptance", seed, boot: 100, partition, result: tree }).unwrap()
}

#[test]
fn criterion_11_heredity_and_determinism() {
    let mut hereditary = true;
    let mut identical = true;
    let one = RayonExecutor::new(Some(1)).unwrap();
    let many = RayonExecutor::new(Some(4)).unwrap();

    let (a, b) = gen_two_sample_scenario(&TwoSampleScenario::Illustrative, &mut stream(1111)).unwrap();
    let pooled = pool(&a, &b).unwrap();
    let tree = PartitionTree::equal_width(Domain::unit(), 4).unwrap();
    let cfg = TwoSampleConfig { boot: 100, seed: 11, ..TwoSampleConfig::default() };
    let x = run_pooled(&pooled, &tree, &cfg, &one).unwrap();
    let y = run_pooled(&pooled, &tree, &cfg, &many).unwrap();
    hereditary &= x.is_hereditary() && y.is_hereditary();
    identical &= report_json(&x, &tree, 11) == report_json(&y, &tree, 11);

    let scenarios = [
        (NetworkScenario::Sbm { n: 40, k: 2, s: 1.0 }, Statistic::Eig),
        (NetworkScenario::Sbm { n: 40, k: 2, s: 1.0 }, Statistic::EigBootstrap),
        (NetworkScenario::Dcsbm { n: 40, het: Heterogeneity::Moderate, s: 8.0, p: 0.6 }, Statistic::Sgnq),
        (NetworkScenario::Dcsbm { n: 40, het: Heterogeneity::Severe, s: 8.0, p: 0.6 }, Statistic::Sgnt),
        (NetworkScenario::BipartiteBlocks { m: 20, n: 30, gamma: 2.0, ratio: 0.3 }, Statistic::AsymEig),
    ];
    let tree = PartitionTree::equal_width(Domain::unit(), 2).unwrap();
    for (i, (scenario, statistic)) in scenarios.into_iter().enumerate() {
        let net = gen_network_scenario(&scenario, &mut stream(1112 + i as u64)).unwrap();
        let mut cfg = NetworkTestConfig::new(statistic);
        cfg.boot = 40;
        cfg.seed = 12;
        let x = run_network_test(&net, &tree, &cfg, &one).unwrap();
        let y = run_network_test(&net, &tree, &cfg, &many).unwrap();
        hereditary &= x.is_hereditary() && y.is_hereditary();
        identical &= report_json(&x, &tree, 12) == report_json(&y, &tree, 12);
    }
    verdict(11, hereditary && identical, format!("hereditary: {hereditary}; identical JSON across 1 and 4 threads: {identical}"));
}

#[test]
fn criterion_12_illustrative_example() {
    let tree = PartitionTree::equal_width(Domain::unit(), 3).unwrap();
    let (mut global, mut left, mut right) = (0, 0, 0);
    for i in 0..100 {
        let seed = derive_seed(1212, i);
        let (a, b) = gen_two_sample_scenario(&TwoSampleScenario::Illustrative, &mut stream(seed)).unwrap();
        let cfg = TwoSampleConfig { boot: 1000, seed, ..TwoSampleConfig::default() };
        let out = run_pooled(&pool(&a, &b).unwrap(), &tree, &cfg, &Sequential).unwrap();
        global += out.global().reject as u32;
        left += out.node(2, 1).unwrap().reject as u32;
        right += out.node(2, 4).unwrap().reject as u32;
    }
    verdict(
        12,
        global >= 95 && left <= 10 && right <= 10,
        format!("global rejected {global}/100, (2,1) rejected {left}, (2,4) rejected {right}"),
    );
}
