use std::ops::Range;

use rayon::prelude::*;

use crate::{Error, Result};

/// Splits `0..n` into one contiguous chunk per worker, folds each chunk into a
/// private accumulator and merges the accumulators in chunk order.
///
/// Accumulators are exact (integer tallies), so the result is independent of
/// `workers`.
pub(crate) fn partitioned<A, F, M>(n: u64, workers: usize, fold: F, merge: M) -> Result<A>
where
    A: Send,
    F: Fn(Range<u64>) -> Result<A> + Sync,
    M: Fn(&mut A, A) -> Result<()>,
{
    let workers = workers.max(1);
    let chunk = n.div_ceil(workers as u64).max(1);
    let ranges: Vec<Range<u64>> = (0..workers as u64)
        .map(|w| (w * chunk).min(n)..((w + 1) * chunk).min(n))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let parts: Vec<Result<A>> = pool.install(|| ranges.into_par_iter().map(&fold).collect());

    let mut parts = parts.into_iter();
    let mut acc = parts.next().expect("at least one worker")?;
    for part in parts {
        merge(&mut acc, part?)?;
    }
    Ok(acc)
}

pub(crate) fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
