//! Non-local means denoising for 1D sample sequences.
//!
//! Each output sample is a convex combination of the input samples in a
//! search window around it, weighted by the similarity of the surrounding
//! patches:
//!
//! ```text
//! d(i, j) = Σ_{k=-P..P} a(k)·(y(i+k) − y(j+k))²        (Σ a(k) = 1)
//! w(i, j) = exp(−d(i, j)/h²) / Z(i),   Z(i) = Σ_j exp(−d(i, j)/h²)
//! out(i)  = Σ_j w(i, j)·y(j)
//! ```
//!
//! Patches reach past the ends of the signal through whole-sample mirror
//! reflection (`y(−k) = y(k)`). The search window is clipped to valid
//! indices. The centre sample `j = i` takes part like any other candidate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::robust_noise_sigma;
use crate::signal::Signal;

pub const DEFAULT_PATCH_HALF_WIDTH: usize = 3;
/// Default search half-width as a multiple of the patch half-width.
pub const SEARCH_PER_PATCH: usize = 16;
/// Automatic smoothing: `h = AUTO_H_FACTOR · σ̂`.
pub const AUTO_H_FACTOR: f64 = 0.6;
/// Floor for the automatic `h` on noiseless input.
const MIN_AUTO_H: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlmConfig {
    /// P: patches span `2P + 1` samples.
    pub patch_half_width: usize,
    /// S: candidates lie within `±S` of the centre; `None` searches the
    /// whole signal.
    pub search_half_width: Option<usize>,
    /// Smoothing parameter; `None` derives it from a robust noise estimate.
    pub h: Option<f64>,
    /// Standard deviation (samples) of the Gaussian patch kernel; 0 selects
    /// the uniform kernel.
    pub kernel_sigma: f64,
}

impl Default for NlmConfig {
    fn default() -> Self {
        Self::with_patch(DEFAULT_PATCH_HALF_WIDTH)
    }
}

impl NlmConfig {
    /// Patch half-width `p` with the default search window `16·p`.
    pub fn with_patch(p: usize) -> Self {
        Self {
            patch_half_width: p,
            search_half_width: Some(SEARCH_PER_PATCH * p.max(1)),
            h: None,
            kernel_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.search_half_width {
            if s < self.patch_half_width {
                return Err(Error::invalid(format!(
                    "search half-width {s} smaller than patch half-width {}",
                    self.patch_half_width
                )));
            }
        }
        if let Some(h) = self.h {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid(format!("h must be > 0, got {h}")));
            }
        }
        if !(self.kernel_sigma.is_finite() && self.kernel_sigma >= 0.0) {
            return Err(Error::invalid("kernel_sigma must be finite and >= 0"));
        }
        Ok(())
    }

    /// Normalized patch kernel `a(k)` for `k = −P..=P`.
    pub fn kernel(&self) -> Vec<f64> {
        let p = self.patch_half_width as isize;
        let raw: Vec<f64> = (-p..=p)
            .map(|k| {
                if self.kernel_sigma == 0.0 {
                    1.0
                } else {
                    (-(k * k) as f64 / (2.0 * self.kernel_sigma * self.kernel_sigma)).exp()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    /// Smoothing parameter used for `y`.
    pub fn effective_h(&self, y: &Signal) -> f64 {
        self.h
            .unwrap_or_else(|| (AUTO_H_FACTOR * robust_noise_sigma(y.samples())).max(MIN_AUTO_H))
    }

    fn search_range(&self, i: usize, n: usize) -> std::ops::RangeInclusive<usize> {
        match self.search_half_width {
            Some(s) => i.saturating_sub(s)..=(i + s).min(n - 1),
            None => 0..=n - 1,
        }
    }
}

/// Whole-sample mirror reflection of `idx` into `0..n`.
fn reflect(idx: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = idx.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Signal padded by `p` reflected samples on both sides.
fn extend(y: &[f64], p: usize) -> Vec<f64> {
    let n = y.len();
    (0..n + 2 * p)
        .map(|t| y[reflect(t as isize - p as isize, n)])
        .collect()
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::invalid(format!("index {i} outside signal of length {n}")));
    }
    Ok(())
}

#[inline]
fn distance(ext: &[f64], kernel: &[f64], i: usize, j: usize) -> f64 {
    // In the extended buffer, patch centred at i starts at offset i.
    let a = &ext[i..i + kernel.len()];
    let b = &ext[j..j + kernel.len()];
    kernel
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (u, v))| w * (u - v) * (u - v))
        .sum()
}

pub fn patch_distance(y: &Signal, i: usize, j: usize, cfg: &NlmConfig) -> Result<f64> {
    cfg.validate()?;
    check_index(i, y.len())?;
    check_index(j, y.len())?;
    let ext = extend(y.samples(), cfg.patch_half_width);
    Ok(distance(&ext, &cfg.kernel(), i, j))
}

/// Normalized weights `(j, w(i, j))` over the search window of `i`.
pub fn weights(y: &Signal, i: usize, cfg: &NlmConfig) -> Result<Vec<(usize, f64)>> {
    cfg.validate()?;
    check_index(i, y.len())?;
    let ext = extend(y.samples(), cfg.patch_half_width);
    let kernel = cfg.kernel();
    let inv_h2 = 1.0 / cfg.effective_h(y).powi(2);
    let raw: Vec<(usize, f64)> = cfg
        .search_range(i, y.len())
        .map(|j| (j, (-distance(&ext, &kernel, i, j) * inv_h2).exp()))
        .collect();
    let z: f64 = raw.iter().map(|(_, w)| w).sum();
    Ok(raw.into_iter().map(|(j, w)| (j, w / z)).collect())
}

pub fn denoise(y: &Signal, cfg: &NlmConfig) -> Result<Signal> {
    cfg.validate()?;
    let x = y.samples();
    let n = x.len();
    let ext = extend(x, cfg.patch_half_width);
    let kernel = cfg.kernel();
    let inv_h2 = 1.0 / cfg.effective_h(y).powi(2);

    // Each index is computed independently, so the parallel result does not
    // depend on how rayon splits the range.
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut acc, mut z) = (0.0, 0.0);
            for j in cfg.search_range(i, n) {
                let w = (-distance(&ext, &kernel, i, j) * inv_h2).exp();
                acc += w * x[j];
                z += w;
            }
            // z >= 1: the self-candidate has distance 0.
            acc / z
        })
        .collect();
    y.with_samples(out)
}
