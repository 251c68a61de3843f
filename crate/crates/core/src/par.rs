//! Data-parallel helpers with a sequential fallback.
//!
//! Every hot loop in the crate goes through [`Exec`], so the same call site
//! runs on the rayon pool (feature `parallel`, on by default) or on the
//! calling thread. Results never depend on the schedule: maps preserve input
//! order and floating reductions use [`det_sum`], whose partition is fixed.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for the data-parallel kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Runs on the rayon pool; identical to `Sequential` when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }
}

const SUM_CHUNK: usize = 256;

/// Sum with a fixed pairwise partition: leaves of `SUM_CHUNK` values are
/// summed left to right, then combined pairwise. The result depends only on
/// the input order, never on how the work was scheduled.
pub fn det_sum(values: &[f64]) -> f64 {
    if values.len() <= SUM_CHUNK {
        return values.iter().sum();
    }
    let leaves = values.len().div_ceil(SUM_CHUNK);
    let half = leaves / 2 * SUM_CHUNK;
    let (lo, hi) = values.split_at(half);
    det_sum(lo) + det_sum(hi)
}
