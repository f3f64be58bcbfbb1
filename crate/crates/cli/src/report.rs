//! Report serialization and small summaries of simulated samples.

use multiscale_core::{PartitionTree, PvalTree};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// JSON report of one test: the p-value tree plus what is needed to rerun it.
#[derive(Serialize)]
pub struct TestReport<'a> {
    pub test: &'a str,
    pub seed: u64,
    pub boot: usize,
    pub partition: &'a PartitionTree,
    #[serde(flatten)]
    pub result: &'a PvalTree,
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Indented tree, one node per line, rejected nodes marked `*`.
pub fn render_text(tree: &PvalTree) -> String {
    tree.render_text()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `x` and `cdf`.
pub fn ks_distance(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let f = cdf(xi);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_uniform_grid() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&x, |t| t.clamp(0.0, 1.0)) - 0.005).abs() < 1e-12);
        assert!((ks_distance(&[0.5], |t| t) - 0.5).abs() < 1e-15);
    }
}
