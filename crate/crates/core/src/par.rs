//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! on the calling thread. Results are always collected in input order, and
//! reductions over chunks happen sequentially after the map, so output does
//! not depend on the thread count.

/// Chunk size for chunked reductions. Fixed so that partial results are the
/// same no matter how many workers run.
pub const CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }

    pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&[T]) -> R + Sync + Send,
    {
        items.par_chunks(chunk.max(1)).map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
    where
        F: Fn(usize) -> R,
    {
        (0..n).map(f).collect()
    }

    pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
    where
        F: Fn(&[T]) -> R,
    {
        items.chunks(chunk.max(1)).map(f).collect()
    }
}

pub use imp::{map, map_chunks, map_range};

/// Whether this build dispatches to rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
