//! Worker pool with an ordered-merge guarantee.
//!
//! Work is split into fixed-size blocks whose boundaries depend only on the
//! problem size, never on the number of workers. Blocks may run on any thread
//! in any order, but their results come back in block order, so a sequential
//! fold over them is bitwise reproducible for any worker count.

use rayon::prelude::*;

/// Number of ensemble members handled by one work block.
pub const ENSEMBLE_BLOCK: usize = 64;

#[derive(Debug)]
pub struct Executor {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `workers == 0` uses the global rayon pool (all cores); `1` runs inline.
    pub fn new(workers: usize) -> Self {
        let pool = if workers > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .ok()
        } else {
            None
        };
        Self { workers, pool }
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    pub fn workers(&self) -> usize {
        if self.workers == 0 {
            rayon::current_num_threads()
        } else {
            self.workers
        }
    }

    /// Evaluates `f(i)` for `i in 0..n` and returns the results in index order.
    pub fn ordered_map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match (&self.pool, self.workers) {
            (_, 1) => (0..n).map(f).collect(),
            (Some(pool), _) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            (None, _) => (0..n).into_par_iter().map(&f).collect(),
        }
    }

    /// Splits `0..total` into `ENSEMBLE_BLOCK`-sized ranges, maps each, and
    /// returns the per-block results in range order.
    pub fn map_blocks<T, F>(&self, total: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    {
        let blocks = total.div_ceil(ENSEMBLE_BLOCK);
        self.ordered_map(blocks, |b| {
            let start = b * ENSEMBLE_BLOCK;
            f(start..(start + ENSEMBLE_BLOCK).min(total))
        })
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(0)
    }
}
