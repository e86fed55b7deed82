//! Thread-pool executor for the core's indexed tasks.

use cvxlab_core::{Executor, Result};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "CVXLAB_THREADS";

pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `threads == 0` means one worker per core.
    pub fn new(threads: usize) -> std::result::Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Pool { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

/// Worker count: the flag if given, else `CVXLAB_THREADS`, else 0 (all cores).
pub fn thread_count(flag: Option<usize>) -> std::result::Result<usize, String> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))
        }
        _ => Ok(0),
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        // Collect every outcome first so the reported error, like the
        // results, does not depend on scheduling.
        let out: Vec<Result<T>> = self.pool.install(|| (0..n as u64).into_par_iter().map(&f).collect());
        out.into_iter().collect()
    }
}
