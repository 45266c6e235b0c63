//! Seeded, schedule-independent Monte Carlo plumbing.
//!
//! Every replica or block of draws gets its own ChaCha stream derived from
//! `(seed, index)`, and results are reduced in index order, so a parallel run
//! is bit-identical to a sequential one.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Seed used whenever the caller does not provide one.
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE;

/// Independent RNG stream number `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent seed for a named sub-computation (splitmix64).
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits `0..count` into fixed blocks, runs `f(block_index, range)` in
/// parallel and returns the results in block order.
pub fn par_blocks<T, F>(count: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Range<usize>) -> T + Sync,
{
    let block = block.max(1);
    let blocks = count.div_ceil(block);
    (0..blocks)
        .into_par_iter()
        .map(|b| f(b as u64, b * block..((b + 1) * block).min(count)))
        .collect()
}

/// Runs `f(replica_index)` for every replica in parallel, preserving order.
pub fn par_replicas<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..count as u64).into_par_iter().map(&f).collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// Two-pass mean and `sd / √n` over values in the given order.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    pub fn sd(&self) -> f64 {
        self.stderr * (self.samples as f64).sqrt()
    }

    /// `|self − other|` in units of the combined standard error.
    pub fn z_against(&self, other: &MeanEstimate) -> f64 {
        let se = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / se
        }
    }

    /// `|self − target|` in units of this estimate's standard error.
    pub fn z_against_value(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / self.stderr
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}
