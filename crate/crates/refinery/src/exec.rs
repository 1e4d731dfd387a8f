//! Thread-pool executor for the core estimators.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use refinery_core::Executor;

/// Environment variable capping worker threads; `0` or unset means one per core.
pub const THREADS_ENV: &str = "REFINERY_THREADS";

/// Runs sample closures on a private rayon pool. Output order always follows
/// the sample index, so reductions downstream see the same sequence for any
/// worker count.
pub struct PoolExecutor {
    pool: ThreadPool,
}

impl PoolExecutor {
    /// `threads == 0` picks the rayon default.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Self { pool: ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    /// Reads [`THREADS_ENV`]. Unparseable values are an error.
    pub fn from_env() -> Result<Self, String> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(s) if !s.trim().is_empty() => {
                s.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV} must be a nonnegative integer, got {s:?}"))?
            }
            _ => 0,
        };
        Self::new(threads).map_err(|e| e.to_string())
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for PoolExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use refinery_core::Sequential;

    #[test]
    fn order_matches_sequential() {
        let pool = PoolExecutor::new(4).unwrap();
        let f = |i: usize| (i as f64).sqrt() * 1e-3 + i as f64;
        assert_eq!(pool.map(10_000, f), Sequential.map(10_000, f));
        assert_eq!(pool.threads(), 4);
    }
}
