//! Schedule-independent data-parallel helpers.
//!
//! Floating-point reductions are split into fixed-size chunks whose partial
//! sums are added in index order, so the result does not depend on the number
//! of worker threads or on work stealing.

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const CHUNK: usize = 256;

/// Map `f` over `0..n`, preserving order.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map `f` over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Deterministic sum of `f(i)` for `i` in `0..n`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    })
    .into_iter()
    .sum()
}

/// Deterministic complex sum of `f(i)` for `i` in `0..n`.
pub fn sum_complex<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<Complex64>()
    })
    .into_iter()
    .sum()
}

/// Caps the global worker pool at `n` threads. Must run before any parallel
/// work; later calls fail.
pub fn set_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::error::invalid("thread count must be positive"));
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::error::invalid(format!("cannot configure thread pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(())
    }
}

/// Number of worker threads available to the parallel helpers.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
