//! Order-preserving data-parallel map with a sequential fallback.
//!
//! Results always come back in input order, so callers observe the same
//! output whether or not the `parallel` feature is enabled.

/// Below this many items the sequential path is used even when parallelism
/// is requested.
const MIN_PARALLEL_BATCH: usize = 32;

#[cfg(feature = "parallel")]
pub(crate) fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if parallel && items.len() >= MIN_PARALLEL_BATCH {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, R, F>(items: &[T], _parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Whether a parallel backend was compiled in.
pub fn available() -> bool {
    cfg!(feature = "parallel")
}
