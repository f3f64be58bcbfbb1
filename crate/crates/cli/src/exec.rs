//! Thread-pool executor. Results are collected in index order, so output does
//! not depend on the number of threads.

use multiscale_core::Executor;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` uses the available parallelism.
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        if threads == Some(0) {
            return Err(CliError::config("--threads must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}
