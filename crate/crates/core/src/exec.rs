//! Task execution backend.
//!
//! With the `parallel` feature (default) and more than one worker, tasks run on
//! a dedicated rayon pool sized to the requested worker count. Otherwise every
//! map runs sequentially on the calling thread. Results always come back in
//! input order, so callers never observe scheduling differences.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        #[cfg(feature = "parallel")]
        {
            let pool = if workers > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("rulemine-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
                Some(pool)
            } else {
                None
            };
            Ok(Executor { workers, pool })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Executor { workers })
    }

    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// Maps `f` over `items`, one item per scheduling unit.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().with_max_len(1).map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// Runs two closures, concurrently when a pool is available.
    pub fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| rayon::join(a, b));
        }
        (a(), b())
    }
}

/// Data-parallel map on the global pool, used for per-feature batch work
/// outside the generation scheduler.
pub(crate) fn map_global<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
