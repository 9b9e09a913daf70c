//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the map step runs on the rayon pool;
//! without it everything is sequential. Reductions always run in a fixed order
//! over the collected per-item results, so values are bit-identical across
//! thread counts and across both build modes.

use num_complex::Complex64;
use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Runtime switch used by the benchmarks to compare the two execution modes
/// in one binary. Has no effect on results, only on scheduling.
pub fn set_force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::Relaxed);
}

pub fn sequential_forced() -> bool {
    FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

#[cfg(feature = "parallel")]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if sequential_forced() {
        items.iter().map(f).collect()
    } else {
        items.par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Map over `0..n` preserving index order.
#[cfg(feature = "parallel")]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if sequential_forced() {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Pairwise (balanced-tree) summation in fixed order.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Neumaier-compensated accumulator for complex values; used inside per-shard
/// loops where millions of small terms accumulate.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        let t = self.sum_re + z.re;
        self.c_re += if self.sum_re.abs() >= z.re.abs() {
            (self.sum_re - t) + z.re
        } else {
            (z.re - t) + self.sum_re
        };
        self.sum_re = t;
        let t = self.sum_im + z.im;
        self.c_im += if self.sum_im.abs() >= z.im.abs() {
            (self.sum_im - t) + z.im
        } else {
            (z.im - t) + self.sum_im
        };
        self.sum_im = t;
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re + self.c_re, self.sum_im + self.c_im)
    }
}
