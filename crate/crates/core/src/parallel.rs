//! Deterministic replica farming.
//!
//! Replica `i` always receives the seed `derive_seed(master, i, 0)` and results
//! are returned in index order, so every reduction done afterwards in a fixed
//! order gives the same bits for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Seed handed to replica `index`.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index, 0)
}

/// Evaluates `f(index, seed)` for `count` replicas on the current rayon pool.
pub fn map_replicas<T, F>(master: u64, count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|i| f(i, replica_seed(master, i)))
        .collect()
}

/// Fallible variant of [`map_replicas`]; the error of the lowest failing
/// index is reported.
pub fn try_map_replicas<T, F>(master: u64, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync + Send,
{
    let all: Vec<Result<T>> = map_replicas(master, count, f);
    all.into_iter().collect()
}

/// Replicas evaluated in parallel per chunk; results are folded in index order.
pub const FOLD_CHUNK: u64 = 512;

/// Streams replica results into `acc` in index order without holding all of
/// them in memory.
pub fn fold_replicas<T, A, F, G>(master: u64, count: u64, f: F, mut acc: A, mut fold: G) -> Result<A>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync + Send,
    G: FnMut(&mut A, u64, T),
{
    let mut start = 0;
    while start < count {
        let end = (start + FOLD_CHUNK).min(count);
        let chunk: Vec<Result<T>> = (start..end)
            .into_par_iter()
            .map(|i| f(i, replica_seed(master, i)))
            .collect();
        for (k, r) in chunk.into_iter().enumerate() {
            fold(&mut acc, start + k as u64, r?);
        }
        start = end;
    }
    Ok(acc)
}

/// Runs `f` on a dedicated pool with `threads` workers (0 picks the default).
pub fn with_threads<R, F>(threads: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Misuse(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}
