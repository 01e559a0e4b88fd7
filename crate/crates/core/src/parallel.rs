//! Ordered chunked reductions.
//!
//! Work over an index range `0..n` is cut into fixed-size chunks. Each chunk
//! is evaluated front to back, and the per-chunk results come back in chunk
//! order. Callers combine them sequentially, so a reduction gives the same
//! bits whether the chunks ran on one thread or many.

use std::ops::Range;

/// Default chunk length for node and path loops.
pub const CHUNK_LEN: usize = 1024;

/// How chunk work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

fn chunk_range(chunk: usize, chunk_len: usize, n: usize) -> Range<usize> {
    let start = chunk * chunk_len;
    start..(start + chunk_len).min(n)
}

/// Evaluates `f` on every chunk of `0..n` and returns the results in chunk order.
pub fn map_chunks<T, F>(n: usize, chunk_len: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    assert!(chunk_len > 0, "chunk length must be positive");
    let chunks = n.div_ceil(chunk_len);
    match exec {
        Execution::Sequential => (0..chunks)
            .map(|c| f(chunk_range(c, chunk_len, n)))
            .collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..chunks)
                .into_par_iter()
                .map(|c| f(chunk_range(c, chunk_len, n)))
                .collect()
        }
    }
}

/// Sum of `f` over `0..n`, accumulated per chunk and then across chunks in order.
pub fn ordered_sum<F>(n: usize, exec: Execution, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    map_chunks(n, CHUNK_LEN, exec, f).into_iter().sum()
}

/// Running mean and centred second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / n;
        self.count += other.count;
    }

    /// Unbiased sample variance; `None` below two samples.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count - 1) as f64).max(0.0))
    }
}
