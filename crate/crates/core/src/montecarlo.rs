//! Seeded, chunked Monte Carlo.
//!
//! The sample index range `0..n` is cut into chunks of [`CHUNK_SIZE`]
//! samples. Chunk `c` draws from ChaCha8 keyed by the user seed with stream
//! id `c`, so every chunk owns an independent, reproducible stream no matter
//! which worker runs it. Partial results are combined in chunk order.
//!
//! Generator: `rand_chacha::ChaCha8Rng` (rand_chacha 0.9), keyed via
//! `SeedableRng::seed_from_u64`, stream selected with `set_stream`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHUNK_SIZE: u64 = 65_536;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonteCarloError {
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("worker count must be at least 1")]
    ZeroWorkers,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// The generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `per_chunk(rng, len)` over every chunk of `n` samples and returns the
/// partial results in chunk order.
///
/// `workers = None` uses the global rayon pool; `Some(k)` runs on a dedicated
/// pool of `k` threads. The output does not depend on the choice.
pub fn run_chunked<T, F>(
    n: u64,
    seed: u64,
    workers: Option<usize>,
    per_chunk: F,
) -> Result<Vec<T>, MonteCarloError>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    if n == 0 {
        return Err(MonteCarloError::ZeroSamples);
    }
    let chunks = n.div_ceil(CHUNK_SIZE);
    let job = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
                per_chunk(&mut chunk_rng(seed, c), len)
            })
            .collect::<Vec<T>>()
    };
    match workers {
        None => Ok(job()),
        Some(0) => Err(MonteCarloError::ZeroWorkers),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| MonteCarloError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Mean of a ±1-valued estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// `sqrt(max(0, 1 − value²) / n_samples)`.
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl Estimate {
    /// Estimate from the integer sum of `n_samples` products, each ±1.
    pub fn from_product_sum(sum: i64, n_samples: u64, seed: u64) -> Self {
        debug_assert!(n_samples > 0 && sum.unsigned_abs() <= n_samples);
        let value = (sum as f64 / n_samples as f64).clamp(-1.0, 1.0);
        Self {
            value,
            std_error: pm_one_std_error(value, n_samples),
            n_samples,
            seed,
        }
    }

    /// `|value − reference|` in units of the standard error; infinite when
    /// the standard error is zero and the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    pub fn within(&self, reference: f64, sigmas: f64) -> bool {
        (self.value - reference).abs() <= sigmas * self.std_error
    }
}

pub fn pm_one_std_error(value: f64, n: u64) -> f64 {
    ((1.0 - value * value).max(0.0) / n as f64).sqrt()
}
