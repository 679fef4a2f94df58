//! Rayon-backed trial executor.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use spectral_dp_core::TrialExecutor;

use crate::error::{CliError, CliResult};

/// Runs trials on a dedicated rayon pool. Results come back in trial
/// order, so any thread count gives the same output.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `threads = None` uses every available core.
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        if threads == Some(0) {
            return Err(CliError::input("--threads must be at least 1"));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::input(format!("cannot start worker pool: {e}")))?;
        Ok(Parallel { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TrialExecutor for Parallel {
    fn map_trials<T, F>(&self, trials: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..trials).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spectral_dp_core::Sequential;

    #[test]
    fn matches_sequential_order() {
        let par = Parallel::new(Some(4)).unwrap();
        let f = |i: usize| (i * i) as u64 ^ 0x5a;
        assert_eq!(par.map_trials(1000, f), Sequential.map_trials(1000, f));
        assert!(Parallel::new(Some(0)).is_err());
    }
}
