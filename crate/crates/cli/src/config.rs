//! JSON configuration file. Every key is optional; command-line flags take
//! precedence over the file, and the file over built-in defaults.

use std::path::{Path, PathBuf};

use multiscale_core::longitudinal::Statistic;
use multiscale_core::{Calibration, Combiner};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// How bins are split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    EqualWidth,
    EqualCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CombineArg {
    Fisher,
    Min,
}

impl From<CombineArg> for Combiner {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Fisher => Combiner::Fisher,
            CombineArg::Min => Combiner::Min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationArg {
    Resample,
    Bonferroni,
}

impl From<CalibrationArg> for Calibration {
    fn from(c: CalibrationArg) -> Self {
        match c {
            CalibrationArg::Resample => Calibration::Resample,
            CalibrationArg::Bonferroni => Calibration::Bonferroni,
        }
    }
}

/// Per-bin network statistic as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StatArg {
    Eig,
    Sgnt,
    Sgnq,
    AsymEig,
}

impl StatArg {
    pub fn statistic(self, bootstrap_correct: bool) -> Statistic {
        match self {
            StatArg::Eig if bootstrap_correct => Statistic::EigBootstrap,
            StatArg::Eig => Statistic::Eig,
            StatArg::Sgnt => Statistic::Sgnt,
            StatArg::Sgnq => Statistic::Sgnq,
            StatArg::AsymEig => Statistic::AsymEig,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub burnin_factor: Option<f64>,
    pub thin_factor: Option<f64>,
    pub independent_chains: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub levels: Option<usize>,
    pub boot: Option<usize>,
    pub combine: Option<CombineArg>,
    pub alpha: Option<f64>,
    pub partition: Option<PartitionMode>,
    pub calibration: Option<CalibrationArg>,
    pub seed: Option<u64>,
    pub include_root_level: Option<bool>,
    pub stat: Option<StatArg>,
    pub bootstrap_correct: Option<bool>,
    pub reverse_logic: Option<bool>,
    pub threads: Option<usize>,
    pub domain: Option<[f64; 2]>,
    pub tw_table: Option<PathBuf>,
    pub max_levels: Option<usize>,
    #[serde(default)]
    pub mcmc: McmcConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_mcmc_keys() {
        let c = FileConfig::parse(r#"{"boot": 50, "combine": "min", "mcmc": {"burnin_factor": 2, "independent_chains": true}}"#).unwrap();
        assert_eq!(c.boot, Some(50));
        assert_eq!(c.combine, Some(CombineArg::Min));
        assert_eq!(c.mcmc.burnin_factor, Some(2.0));
        assert_eq!(c.mcmc.thin_factor, None);
        assert_eq!(c.mcmc.independent_chains, Some(true));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(matches!(FileConfig::parse(r#"{"bot": 5}"#), Err(CliError::Config(_))));
        assert!(matches!(FileConfig::parse("{"), Err(CliError::Config(_))));
    }
}
