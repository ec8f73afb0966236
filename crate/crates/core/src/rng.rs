//! Seeded, thread-count independent random streams and Monte Carlo accumulators.
//!
//! Work is cut into fixed-size chunks; chunk `c` of a computation seeded with
//! `seed` always draws from stream `c` of a ChaCha8 generator keyed by `seed`.
//! Chunk results are combined in chunk order, so estimates do not depend on
//! how rayon schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Scalar;

/// Samples per Monte Carlo chunk.
pub const CHUNK: usize = 4096;

/// Independent generator for `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `work(rng, start, len)` over `total` items in chunks of [`CHUNK`] and
/// returns the per-chunk results in order.
pub fn chunked<R, F>(seed: u64, total: usize, work: F) -> Vec<R>
where
    R: Send,
    F: Fn(&mut ChaCha8Rng, usize, usize) -> R + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(total - start);
            let mut rng = substream(seed, c as u64);
            work(&mut rng, start, len)
        })
        .collect()
}

/// Streaming mean/variance (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
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
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn from_iter<I: IntoIterator<Item = f64>>(it: I) -> Self {
        let mut acc = Self::new();
        for x in it {
            acc.push(x);
        }
        acc
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub stderr: T,
}

impl<T: Scalar> Estimate<T> {
    pub fn from_mean_var(acc: &MeanVar) -> Self {
        Self {
            value: T::of(acc.mean),
            stderr: T::of(acc.stderr()),
        }
    }

    pub fn exact(value: T) -> Self {
        Self {
            value,
            stderr: T::zero(),
        }
    }
}

/// Folds chunk accumulators in order.
pub fn merge_all<'a, I: IntoIterator<Item = &'a MeanVar>>(parts: I) -> MeanVar {
    let mut total = MeanVar::new();
    for p in parts {
        total.merge(p);
    }
    total
}
