//! Reproducible parallel sampling.
//!
//! Sample `i` draws from the ChaCha8 stream `i` of the master seed, so its
//! value does not depend on which worker ran it. Results come back in sample
//! order and every reduction runs sequentially over that order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Monte Carlo settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Two-sided confidence level of the reported intervals.
    pub confidence: f64,
    /// Worker threads; `0` uses the global rayon pool.
    pub workers: usize,
    /// Multiplies every theoretical bound. Test hook for the failure path.
    pub bound_scale: f64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            confidence: 0.99,
            workers: 0,
            bound_scale: 1.0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InsufficientData("zero Monte Carlo samples".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence must lie in ]0,1[, got {}",
                self.confidence
            )));
        }
        if !(self.bound_scale >= 0.0 && self.bound_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bound_scale must be finite and nonnegative, got {}",
                self.bound_scale
            )));
        }
        Ok(())
    }
}

/// The random stream owned by sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` on `workers` threads (`0` = global pool).
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates `f(i, rng_i)` for every sample index, in index order.
pub fn map_samples<T, F>(mc: &McConfig, f: F) -> Result<Vec<T>>
where
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
    T: Send,
{
    mc.validate()?;
    let seed = mc.seed;
    with_workers(mc.workers, || {
        (0..mc.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                f(i, &mut rng)
            })
            .collect()
    })
}
