//! Command-line front end: CSV ingestion, configuration merging, a
//! thread-pool executor and report emission around `multiscale-core`.

pub mod app;
pub mod config;
pub mod error;
pub mod exec;
pub mod input;
pub mod report;

pub use app::{execute, Cli};
pub use error::{CliError, CliResult};
pub use exec::RayonExecutor;
