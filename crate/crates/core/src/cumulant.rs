//! Fourth-order cumulant slice estimation and the matched FIR filter built
//! from it.
//!
//! The slice `c4(m) = cum(x(n), x(n), x(n), x(n+m))` vanishes for Gaussian
//! processes, so a filter whose taps mirror the slice of the observed signal
//! correlates against the non-Gaussian component only. Taps are laid out as
//!
//! ```text
//! h(m) = c4(L − m)   for m = 0..=L
//! h(m) = c4(m − L)   for m = L+1..=2L
//! ```
//!
//! and the output is `y(n) = γ·Σ h(m)·x(n − m)` with `γ = 1/|excess kurtosis|`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

pub const DEFAULT_MAX_LAG: usize = 64;

/// Kurtosis estimates within this many standard errors (`√(24/N)`) of zero
/// are treated as Gaussian.
pub const GAUSSIAN_KURTOSIS_Z: f64 = 3.0;
const KURTOSIS_EPS: f64 = 1e-9;

/// `c4(m)` for `m = 0..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantSlice {
    values: Vec<f64>,
}

impl CumulantSlice {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cumulant slice needs at least lag 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cumulant slice has non-finite values"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }
}

/// Estimates the slice for lags `0..=max_lag` from the demeaned signal.
///
/// Each lag uses the `N − m` available products:
/// `c4(m) = ⟨x³(n)·x(n+m)⟩ − 3·⟨x(n)·x(n+m)⟩·⟨x²(n)⟩`, every average taken
/// over `n = 0..N−m`.
pub fn estimate_slice(x: &Signal, max_lag: usize) -> Result<CumulantSlice> {
    let n = x.len();
    if n <= 4 * max_lag {
        return Err(Error::TooShort {
            need: 4 * max_lag,
            got: n,
        });
    }
    let mean = x.samples().iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.samples().iter().map(|v| v - mean).collect();
    let values = (0..=max_lag)
        .into_par_iter()
        .map(|m| {
            let count = (n - m) as f64;
            let (mut s31, mut s11, mut s2) = (0.0, 0.0, 0.0);
            for (a, b) in d[..n - m].iter().zip(&d[m..]) {
                let a2 = a * a;
                s31 += a2 * a * b;
                s11 += a * b;
                s2 += a2;
            }
            s31 / count - 3.0 * (s11 / count) * (s2 / count)
        })
        .collect();
    CumulantSlice::new(values)
}

/// Linear-phase FIR filter of length `2L + 1` with output gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantFilter {
    taps: Vec<f64>,
    gain: f64,
}

impl CumulantFilter {
    /// Filter from explicit taps, used for testing and imported designs.
    pub fn from_taps(taps: Vec<f64>, gain: f64) -> Result<Self> {
        if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) || !gain.is_finite() {
            return Err(Error::invalid("filter taps and gain must be finite and non-empty"));
        }
        Ok(Self { taps, gain })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    /// Delay of the linear-phase response, in samples.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Writes `index,tap` rows with a header.
    pub fn write_taps_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "tap"])?;
        for (i, t) in self.taps.iter().enumerate() {
            out.write_record([i.to_string(), format!("{t:?}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Mirrors the slice into `2L + 1` taps. The gain starts at 1; set it with
/// [`CumulantFilter::with_gain`] from [`gamma`].
pub fn build_filter(slice: &CumulantSlice) -> Result<CumulantFilter> {
    let c = slice.values();
    if c.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("all-zero cumulant slice".into()));
    }
    let l = slice.max_lag();
    let taps = (0..=2 * l)
        .map(|m| if m <= l { c[l - m] } else { c[m - l] })
        .collect();
    Ok(CumulantFilter { taps, gain: 1.0 })
}

/// Sample excess kurtosis `E[(x−μ)⁴]/E[(x−μ)²]² − 3`.
pub fn excess_kurtosis(x: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(m2, m4), v| {
        let d2 = (v - mean) * (v - mean);
        (m2 + d2, m4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 {
        return Err(Error::Degenerate("constant signal has no kurtosis".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Output gain `γ = 1/|κ|`.
///
/// Fails when `|κ|` is statistically indistinguishable from zero, i.e. below
/// `GAUSSIAN_KURTOSIS_Z·√(24/N)`; the caller should then use `γ = 1`.
pub fn gamma(x: &Signal) -> Result<f64> {
    let kappa = excess_kurtosis(x.samples())?;
    let floor = KURTOSIS_EPS.max(GAUSSIAN_KURTOSIS_Z * (24.0 / x.len() as f64).sqrt());
    if kappa.abs() < floor {
        return Err(Error::Degenerate(format!(
            "excess kurtosis {kappa:.3e} is within {floor:.3e} of zero (near-Gaussian input)"
        )));
    }
    Ok(1.0 / kappa.abs())
}

/// Causal zero-padded convolution scaled by the filter gain; output length
/// equals input length.
pub fn apply(filter: &CumulantFilter, x: &Signal) -> Result<Signal> {
    let h = &filter.taps;
    let xs = x.samples();
    let out = (0..xs.len())
        .map(|n| {
            let acc: f64 = h
                .iter()
                .take(n + 1)
                .enumerate()
                .map(|(m, t)| t * xs[n - m])
                .sum();
            filter.gain * acc
        })
        .collect();
    x.with_samples(out)
}

/// Estimates, builds and applies the matched filter; returns the filter too.
pub fn enhance_with_filter(x: &Signal, max_lag: usize) -> Result<(Signal, CumulantFilter)> {
    let slice = estimate_slice(x, max_lag)?;
    let gain = match gamma(x) {
        Ok(g) => g,
        Err(e) => {
            log::warn!("cumulant filter gain falls back to 1: {e}");
            1.0
        }
    };
    let filter = build_filter(&slice)?.with_gain(gain);
    Ok((apply(&filter, x)?, filter))
}

pub fn enhance(x: &Signal, max_lag: usize) -> Result<Signal> {
    enhance_with_filter(x, max_lag).map(|(y, _)| y)
}
