//! Seeded Bernoulli–Gaussian noise channel.
//!
//! Every stochastic routine draws from a ChaCha8 generator keyed by a 64-bit
//! seed and a stream id, so independent consumers of one seed never share a
//! sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved by the library.
pub mod streams {
    pub const CHANNEL: u64 = 1;
    pub const PAYLOAD: u64 = 2;
    pub const DATASET: u64 = 3;
}

/// Gaussian background plus sparse Gaussian impulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub gaussian_sigma: f64,
    pub impulse_prob: f64,
    pub impulse_sigma: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            gaussian_sigma: 0.0,
            impulse_prob: 0.0,
            impulse_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            gaussian_sigma: sigma,
            rng_seed: seed,
            ..Self::none()
        }
    }

    pub fn with_impulses(mut self, prob: f64, sigma: f64) -> Self {
        self.impulse_prob = prob;
        self.impulse_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Expected noise power per sample.
    pub fn power(&self) -> f64 {
        self.gaussian_sigma.powi(2) + self.impulse_prob * self.impulse_sigma.powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma.is_finite() && self.gaussian_sigma >= 0.0) {
            return Err(Error::invalid("gaussian_sigma must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.impulse_prob) {
            return Err(Error::invalid("impulse_prob must lie in [0, 1]"));
        }
        if !(self.impulse_sigma.is_finite() && self.impulse_sigma >= 0.0) {
            return Err(Error::invalid("impulse_sigma must be finite and >= 0"));
        }
        Ok(())
    }

    /// Draws `n` noise samples.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = stream_rng(self.rng_seed, streams::CHANNEL);
        Ok((0..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                let hit = rng.random_bool(self.impulse_prob);
                let i: f64 = StandardNormal.sample(&mut rng);
                let impulse = if hit { self.impulse_sigma * i } else { 0.0 };
                self.gaussian_sigma * g + impulse
            })
            .collect())
    }
}

/// Returns `s + noise`, reproducible under `spec.rng_seed`.
pub fn add_noise(s: &Signal, spec: &NoiseSpec) -> Result<Signal> {
    let noise = spec.sample(s.len())?;
    s.with_samples(s.samples().iter().zip(&noise).map(|(a, b)| a + b).collect())
}

/// Gaussian sigma that puts `signal_power` at `snr_db` against white noise.
pub fn sigma_for_snr(signal_power: f64, snr_db: f64) -> f64 {
    (signal_power / 10f64.powf(snr_db / 10.0)).sqrt()
}

pub fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = stream_rng(seed, streams::PAYLOAD);
    (0..n).map(|_| rng.random_range(0..=1u8)).collect()
}
