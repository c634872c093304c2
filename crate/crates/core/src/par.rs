//! Deterministic data-parallel reduction over trajectory indices.
//!
//! Indices are cut into chunks whose boundaries depend only on the total
//! count. Each chunk folds into its own accumulator and the chunk results are
//! merged left to right, so the floating-point result does not depend on the
//! execution policy or the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution policy for trajectory loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon work stealing on the current thread pool. Falls back to
    /// sequential execution when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Exec {
    /// Policy for a worker count: one worker means sequential.
    pub fn from_workers(workers: usize) -> Self {
        if workers <= 1 {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

const MIN_CHUNK: usize = 64;
const MAX_CHUNKS: usize = 256;

pub(crate) fn chunk_len(n: usize) -> usize {
    MIN_CHUNK.max(n.div_ceil(MAX_CHUNKS))
}

/// Folds `body` over `0..n` chunk by chunk and merges the chunk accumulators
/// in index order.
pub fn chunked_reduce<A, I, B, M>(n: usize, exec: Exec, init: I, body: B, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    B: Fn(&mut A, usize) + Sync,
    M: Fn(&mut A, A),
{
    let len = chunk_len(n);
    let n_chunks = n.div_ceil(len);
    let run_chunk = |c: usize| {
        let mut acc = init();
        for i in c * len..((c + 1) * len).min(n) {
            body(&mut acc, i);
        }
        acc
    };
    let parts: Vec<A> = match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n_chunks).into_par_iter().map(run_chunk).collect(),
        _ => (0..n_chunks).map(run_chunk).collect(),
    };
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Order-preserving map over `0..n`.
pub fn map_indexed<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(&f).collect(),
        _ => (0..n).map(f).collect(),
    }
}
