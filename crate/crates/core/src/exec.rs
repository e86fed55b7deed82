//! Indexed task execution. The core runs tasks in order; the CLI crate
//! supplies a thread-pool executor. Results are always returned in index
//! order, so output does not depend on the executor.

use alloc::vec::Vec;

use crate::error::Result;

pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        (0..n as u64).map(f).collect()
    }
}
