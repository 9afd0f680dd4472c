//! Data-parallel kernels with a sequential fallback.
//!
//! With the `parallel` feature the loops below run on the rayon pool; without
//! it they are plain iterators. Reductions always split the input into
//! fixed-size blocks and add the block sums in order, so results are
//! bit-identical regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Block length used for deterministic reductions.
pub const BLOCK: usize = 4096;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
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

/// Apply `f(block_index, block)` to consecutive mutable blocks of `out`.
pub fn for_each_block_mut<T, F>(out: &mut [T], block: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(block)
            .enumerate()
            .for_each(|(b, chunk)| f(b, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(block)
            .enumerate()
            .for_each(|(b, chunk)| f(b, chunk));
    }
}

/// Deterministic blocked sum of `f(i)` over `0..n`.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let partial = map_range(blocks, |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_range(a.len(), |i| a[i] * b[i])
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for_each_block_mut(y, BLOCK, |b, chunk| {
        let off = b * BLOCK;
        for (k, yi) in chunk.iter_mut().enumerate() {
            *yi += alpha * x[off + k];
        }
    });
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for_each_block_mut(x, BLOCK, |_, chunk| {
        for v in chunk.iter_mut() {
            *v *= alpha;
        }
    });
}

/// Number of worker threads available to the parallel kernels.
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_sum_matches_serial() {
        let n = 3 * BLOCK + 17;
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let serial: f64 = v.iter().map(|x| x * x).sum();
        assert!((dot(&v, &v) - serial).abs() < 1e-9);
    }

    #[test]
    fn axpy_and_scale() {
        let x = vec![1.0; BLOCK + 3];
        let mut y = vec![2.0; BLOCK + 3];
        axpy(0.5, &x, &mut y);
        scale(2.0, &mut y);
        assert!(y.iter().all(|&v| v == 5.0));
    }
}
