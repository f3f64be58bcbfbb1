//! Execution strategy for independent replicate computations.

use alloc::vec::Vec;

/// Runs `f(0), f(1), ..., f(n - 1)` and returns the results in index order.
///
/// Implementations may evaluate the calls concurrently; callers only pass
/// closures whose result depends on the index alone, so any implementation
/// yields identical output.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Evaluates every call on the current thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
