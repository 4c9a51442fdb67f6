//! Execution strategy for the data-parallel kernels.
//!
//! Work is split into fixed-size chunks whose partial results are combined
//! in chunk order, so both strategies produce bit-identical results.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled; otherwise runs
    /// sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `0..chunks`, collecting results in chunk order.
pub(crate) fn map_chunks<R, F>(exec: Execution, chunks: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(f).collect()
        }
        _ => (0..chunks).map(f).collect(),
    }
}

/// Runs `f(chunk_index, chunk)` over `chunk_len`-sized pieces of `data`.
pub(crate) fn for_each_chunk_mut<T, R, F>(
    exec: Execution,
    data: &mut [T],
    chunk_len: usize,
    f: F,
) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .map(|(i, c)| f(i, c))
                .collect()
        }
        _ => data
            .chunks_mut(chunk_len)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect(),
    }
}
