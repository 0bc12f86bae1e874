//! Execution strategy for embarrassingly parallel trial loops.
//!
//! All randomness is derived from trial indices, so the parallel and
//! sequential paths produce bit-identical results; only wall time differs.

/// How to execute a batch of independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Plain sequential loop.
    Sequential,
    /// Rayon work-stealing pool. `threads = None` uses the global default.
    #[cfg(feature = "parallel")]
    Rayon { threads: Option<usize> },
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon { threads: None }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

/// Map `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(parallelism: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match parallelism {
        Parallelism::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon { threads } => {
            use rayon::prelude::*;
            match threads {
                None => (0..n).into_par_iter().map(f).collect(),
                Some(t) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(t.max(1))
                        .build()
                        .expect("failed to build thread pool");
                    pool.install(|| (0..n).into_par_iter().map(f).collect())
                }
            }
        }
    }
}
