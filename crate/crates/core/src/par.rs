//! Execution policy for the data-parallel inner loops.
//!
//! Every parallel code path in this crate splits work into fixed-size chunks
//! and combines chunk results in chunk order, so `Sequential` and `Parallel`
//! produce bit-identical output. Without the `parallel` feature the
//! `Parallel` policy silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for the per-point update loops.
pub(crate) const CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// True when work will actually be spread across the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_range<T, F>(par: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// Like [`map_range`] but hands each worker a reusable scratch value.
pub(crate) fn map_range_init<T, S, I, F>(par: Parallelism, n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        return (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
    }
    let _ = par;
    let mut scratch = init();
    (0..n).map(|i| f(&mut scratch, i)).collect()
}

/// Runs `f` over matching `CHUNK`-sized windows of two mutable slices and
/// returns the per-chunk results in chunk order. `f` receives the offset of
/// the chunk in the full slices. A single chunk, or a single-thread pool,
/// runs on the calling thread.
pub(crate) fn chunks_mut2<A, B, R, F>(par: Parallelism, a: &mut [A], b: &mut [B], f: F) -> Vec<R>
where
    A: Send,
    B: Send,
    R: Send,
    F: Fn(usize, &mut [A], &mut [B]) -> R + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if par.is_parallel() && a.len() > CHUNK && rayon::current_num_threads() > 1 {
        return a
            .par_chunks_mut(CHUNK)
            .zip(b.par_chunks_mut(CHUNK))
            .enumerate()
            .map(|(c, (ca, cb))| f(c * CHUNK, ca, cb))
            .collect();
    }
    let _ = par;
    a.chunks_mut(CHUNK)
        .zip(b.chunks_mut(CHUNK))
        .enumerate()
        .map(|(c, (ca, cb))| f(c * CHUNK, ca, cb))
        .collect()
}
