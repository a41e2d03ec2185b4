//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon unless the
//! process-wide mode has been switched to [`Execution::Sequential`]. Without
//! the feature everything runs on the calling thread. Only maps and disjoint
//! chunk updates are parallelized; floating-point reductions always happen
//! sequentially in index order so results are bit-identical in both modes.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "STRICHARTZ_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// The execution mode currently in effect.
pub fn execution() -> Execution {
    if cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed) {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// Switches the process-wide mode. Requesting `Parallel` without the
/// `parallel` feature is accepted and has no effect.
pub fn set_execution(mode: Execution) {
    FORCE_SEQUENTIAL.store(mode == Execution::Sequential, Ordering::Relaxed);
}

/// Sizes the global worker pool from `STRICHARTZ_LAB_THREADS` if it is set.
/// Returns the cap that was applied.
pub fn configure_threads_from_env() -> Option<usize> {
    let cap = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok()?;
    configure_threads(cap);
    Some(cap)
}

#[cfg(feature = "parallel")]
pub fn configure_threads(cap: usize) {
    if cap == 1 {
        set_execution(Execution::Sequential);
    }
    // The global pool can only be built once; later calls keep the first size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cap.max(1)).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_cap: usize) {}

#[cfg(feature = "parallel")]
fn parallel_enabled() -> bool {
    execution() == Execution::Parallel
}

/// Ordered map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Ordered map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Runs `f(chunk_index, chunk)` over disjoint chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if parallel_enabled() && data.len() > chunk {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Like [`for_each_chunk_mut`] over two equally chunked buffers.
pub fn for_each_chunk_pair_mut<A, B, F>(a: &mut [A], chunk_a: usize, b: &mut [B], chunk_b: usize, f: F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    let (chunk_a, chunk_b) = (chunk_a.max(1), chunk_b.max(1));
    #[cfg(feature = "parallel")]
    if parallel_enabled() && a.len() > chunk_a {
        use rayon::prelude::*;
        a.par_chunks_mut(chunk_a)
            .zip(b.par_chunks_mut(chunk_b))
            .enumerate()
            .for_each(|(i, (x, y))| f(i, x, y));
        return;
    }
    a.chunks_mut(chunk_a)
        .zip(b.chunks_mut(chunk_b))
        .enumerate()
        .for_each(|(i, (x, y))| f(i, x, y));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_in_both_modes() {
        let items: Vec<u64> = (0..1000).collect();
        set_execution(Execution::Parallel);
        let par = map(&items, |x| x * x);
        set_execution(Execution::Sequential);
        let seq = map(&items, |x| x * x);
        set_execution(Execution::Parallel);
        assert_eq!(par, seq);
        assert_eq!(map_range(5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn chunk_updates_cover_everything() {
        let mut data = vec![0usize; 103];
        for_each_chunk_mut(&mut data, 10, |i, c| c.iter_mut().for_each(|x| *x = i));
        assert_eq!(data[0], 0);
        assert_eq!(data[102], 10);
    }
}
