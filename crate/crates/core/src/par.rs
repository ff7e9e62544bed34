//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers fan out over rayon; without it,
//! or after [`set_sequential`]`(true)`, they run on the calling thread. Work is
//! always split into fixed-size chunks and partial results are merged in
//! chunk order, so floating-point output does not depend on the thread count.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};

/// Chunk length used for vector kernels.
pub const CHUNK: usize = 4096;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Route every helper through the sequential path at runtime.
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// `(0..n).map(f).collect()`, in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Fill `out` chunk by chunk; `f` gets the chunk's starting offset.
pub fn fill_chunks<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && out.len() > CHUNK {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| f(c * CHUNK, chunk));
        return;
    }
    for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
        f(c * CHUNK, chunk);
    }
}

/// [`fill_chunks`] whose per-chunk results are combined left to right, so
/// the reduction does not depend on the thread count.
pub fn fill_reduce_chunks<T, R, F, C>(out: &mut [T], identity: R, f: F, combine: C) -> R
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
    C: Fn(R, R) -> R,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && out.len() > CHUNK {
        use rayon::prelude::*;
        let partials: Vec<R> = out.par_chunks_mut(CHUNK).enumerate().map(|(c, chunk)| f(c * CHUNK, chunk)).collect();
        return partials.into_iter().fold(identity, combine);
    }
    out.chunks_mut(CHUNK).enumerate().map(|(c, chunk)| f(c * CHUNK, chunk)).fold(identity, combine)
}

/// Deterministic chunked reduction: `f` maps an index range to a partial
/// value, partials are combined left to right with `combine`.
pub fn reduce_chunks<R, F, C>(n: usize, identity: R, f: F, combine: C) -> R
where
    R: Send + Clone,
    F: Fn(Range<usize>) -> R + Sync + Send,
    C: Fn(R, R) -> R,
{
    let chunks = n.div_ceil(CHUNK);
    let partials = map_indexed(chunks, |c| f(c * CHUNK..((c + 1) * CHUNK).min(n)));
    partials.into_iter().fold(identity, combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_thread_count_independent() {
        let n = 3 * CHUNK + 17;
        let f = |r: Range<usize>| r.map(|i| 1.0 / (1.0 + i as f64)).sum::<f64>();
        let a = reduce_chunks(n, 0.0, f, |a, b| a + b);
        set_sequential(true);
        let b = reduce_chunks(n, 0.0, f, |a, b| a + b);
        set_sequential(false);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fill_chunks_sees_offsets() {
        let mut v = vec![0usize; 2 * CHUNK + 5];
        fill_chunks(&mut v, |off, chunk| {
            for (i, x) in chunk.iter_mut().enumerate() {
                *x = off + i;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
