//! Reproducible random streams and order-independent reductions.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, domain, index)`,
//! and trials are grouped into fixed-size batches whose partial results are
//! merged in index order. The outcome therefore does not depend on how many
//! worker threads rayon happens to use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trials per parallel work item.
pub const BATCH_SIZE: u64 = 1024;

/// Separates the random streams used by different parts of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Environment = 1,
    CoveredLength = 2,
    SinrH0 = 3,
    SinrDependent = 4,
    InterfererField = 5,
    Customers = 6,
}

/// Factory for per-trial random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng(&self, domain: Domain, index: u64) -> ChaCha8Rng {
        let key = splitmix64(self.seed ^ splitmix64(domain as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: u64,
    /// Set when fewer than two samples were available, in which case the
    /// standard error is reported as zero.
    pub degenerate: bool,
}

impl McEstimate {
    /// Estimate for a proportion `hits / n`.
    pub fn proportion(hits: u64, n: u64) -> Self {
        let mut acc = MeanAccumulator { count: n, ..Default::default() };
        if n > 0 {
            let p = hits as f64 / n as f64;
            acc.mean = p;
            // sum of squared deviations of a 0/1 sample
            acc.m2 = hits as f64 * (1.0 - p) * (1.0 - p) + (n - hits) as f64 * p * p;
        }
        acc.estimate()
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Running mean and sum of squared deviations (Welford / Chan merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
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

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> McEstimate {
        let n = self.count;
        if n < 2 {
            return McEstimate {
                mean: if n == 0 { f64::NAN } else { self.mean },
                stderr: 0.0,
                n_trials: n,
                degenerate: true,
            };
        }
        let var = self.m2 / (n - 1) as f64;
        McEstimate {
            mean: self.mean,
            stderr: (var / n as f64).sqrt(),
            n_trials: n,
            degenerate: false,
        }
    }
}

/// Runs `trial(index, batch_state)` for every index in `0..n_trials`, batching
/// indices in fixed blocks of [`BATCH_SIZE`], and folds batch states in index order.
pub fn run_batched<S, F, M>(n_trials: u64, init: impl Fn() -> S + Sync, trial: F, mut merge: M) -> S
where
    S: Send,
    F: Fn(u64, &mut S) + Sync,
    M: FnMut(&mut S, S),
{
    let n_batches = n_trials.div_ceil(BATCH_SIZE);
    let partials: Vec<S> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut state = init();
            let start = b * BATCH_SIZE;
            let end = (start + BATCH_SIZE).min(n_trials);
            for idx in start..end {
                trial(idx, &mut state);
            }
            state
        })
        .collect();
    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}
