//! Trial fan-out.
//!
//! Monte Carlo routines describe one trial as a closure of the trial index
//! and hand it to a [`TrialExecutor`]. Executors must return results in
//! index order; aggregation then happens sequentially, so a result is the
//! same bits whether trials ran on one thread or many.

use alloc::vec::Vec;

use crate::error::Result;

pub trait TrialExecutor: Sync {
    /// Evaluates `f(0), f(1), ..., f(trials - 1)` and returns them in order.
    fn map_trials<T, F>(&self, trials: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;

    /// Like [`map_trials`](Self::map_trials) but stops at the lowest-index error.
    fn try_map_trials<T, F>(&self, trials: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map_trials(trials, f).into_iter().collect()
    }
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialExecutor for Sequential {
    fn map_trials<T, F>(&self, trials: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..trials).map(f).collect()
    }
}
