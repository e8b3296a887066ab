//! Impulse-noise preprocessor.
//!
//! Samples whose modulus exceeds a median-derived threshold
//! `τ_r = (1 + 2·τ0)·median(|y|)` are attenuated by the inverse-square law
//! `y·(τ_r/|y|)²`, then the result is peak-normalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::median;
use crate::signal::Signal;

pub const DEFAULT_TAU0: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InpConfig {
    pub tau0: f64,
}

impl Default for InpConfig {
    fn default() -> Self {
        Self { tau0: DEFAULT_TAU0 }
    }
}

impl InpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0.is_finite() && self.tau0 >= 0.0) {
            return Err(Error::invalid(format!("tau0 must be >= 0, got {}", self.tau0)));
        }
        Ok(())
    }
}

pub fn threshold(y: &Signal, cfg: &InpConfig) -> Result<f64> {
    cfg.validate()?;
    let moduli: Vec<f64> = y.samples().iter().map(|v| v.abs()).collect();
    Ok((1.0 + 2.0 * cfg.tau0) * median(&moduli))
}

fn clip_sample(v: f64, tau_r: f64) -> f64 {
    let m = v.abs();
    if m <= tau_r {
        v
    } else {
        let r = tau_r / m;
        v * r * r
    }
}

pub fn clip(y: &Signal, tau_r: f64) -> Result<Signal> {
    if !(tau_r.is_finite() && tau_r > 0.0) {
        return Err(Error::invalid(format!("clip threshold must be > 0, got {tau_r}")));
    }
    y.with_samples(y.samples().iter().map(|&v| clip_sample(v, tau_r)).collect())
}

pub fn normalize(y: &Signal) -> Result<Signal> {
    let peak = y.peak();
    if peak == 0.0 {
        return Err(Error::ZeroEnergy("cannot peak-normalize an all-zero signal"));
    }
    y.with_samples(y.samples().iter().map(|v| v / peak).collect())
}

/// `normalize(clip(y, threshold(y)))`.
pub fn inp(y: &Signal, cfg: &InpConfig) -> Result<Signal> {
    let tau_r = threshold(y, cfg)?;
    normalize(&clip(y, tau_r)?)
}

/// Hard truncation at `±tau_r`; comparison mode for the benchmark harness.
pub fn truncate(y: &Signal, tau_r: f64) -> Result<Signal> {
    if !(tau_r > 0.0) {
        return Err(Error::invalid("truncation threshold must be > 0"));
    }
    y.with_samples(y.samples().iter().map(|v| v.clamp(-tau_r, tau_r)).collect())
}

/// Zeroing of samples above `tau_r`; comparison mode for the benchmark harness.
pub fn zero_out(y: &Signal, tau_r: f64) -> Result<Signal> {
    if !(tau_r > 0.0) {
        return Err(Error::invalid("zeroing threshold must be > 0"));
    }
    y.with_samples(
        y.samples()
            .iter()
            .map(|&v| if v.abs() > tau_r { 0.0 } else { v })
            .collect(),
    )
}
