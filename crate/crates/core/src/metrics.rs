//! Scalar quality metrics: SNR, bit error rate, gain coefficient.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// `10·log10(Σ clean² / Σ (noisy − clean)²)`; `+∞` when the residual is zero.
pub fn snr_db(clean: &Signal, noisy: &Signal) -> Result<f64> {
    clean.ensure_same_len(noisy)?;
    let signal = clean.energy();
    if signal == 0.0 {
        return Err(Error::ZeroEnergy("clean reference"));
    }
    let residual: f64 = clean
        .samples()
        .iter()
        .zip(noisy.samples())
        .map(|(c, y)| (y - c) * (y - c))
        .sum();
    if residual == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / residual).log10())
}

/// Fraction of positions where the bit sequences differ.
pub fn ber(sent: &[u8], recovered: &[u8]) -> Result<f64> {
    if sent.len() != recovered.len() {
        return Err(Error::LengthMismatch {
            left: sent.len(),
            right: recovered.len(),
        });
    }
    if sent.is_empty() {
        return Err(Error::invalid("bit sequences are empty"));
    }
    let errors = sent.iter().zip(recovered).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / sent.len() as f64)
}

/// Squared normalized lag-0 cross-correlation, floored at zero correlation.
///
/// `α = max(ρ, 0)²` with `ρ = ⟨c, e⟩ / (‖c‖·‖e‖)`. α is 1 exactly when
/// `enhanced` is a positive multiple of `clean` and 0 when the two are
/// orthogonal or anti-correlated.
pub fn gain_coefficient(clean: &Signal, enhanced: &Signal) -> Result<f64> {
    clean.ensure_same_len(enhanced)?;
    let cc = clean.energy();
    if cc == 0.0 {
        return Err(Error::ZeroEnergy("clean reference"));
    }
    let ee = enhanced.energy();
    if ee == 0.0 {
        return Ok(0.0);
    }
    let ce: f64 = clean
        .samples()
        .iter()
        .zip(enhanced.samples())
        .map(|(c, e)| c * e)
        .sum();
    if ce <= 0.0 {
        return Ok(0.0);
    }
    Ok((ce * ce / (cc * ee)).clamp(0.0, 1.0))
}

/// Reference and estimate brought onto a common time base and scale.
#[derive(Debug, Clone)]
pub struct Aligned {
    pub reference: Signal,
    pub estimate: Signal,
    /// Least-squares gain applied to the delay-compensated estimate.
    pub gain: f64,
}

/// Advances `estimate` by `delay` samples, trims both signals to the overlap
/// and rescales the estimate by the least-squares gain onto the reference.
///
/// The gain is signed, so a polarity inversion introduced by processing is
/// undone. A zero-energy estimate keeps gain 0.
pub fn align(reference: &Signal, estimate: &Signal, delay: usize) -> Result<Aligned> {
    reference.ensure_same_len(estimate)?;
    let n = reference.len();
    if delay >= n {
        return Err(Error::TooShort {
            need: delay,
            got: n,
        });
    }
    let r = &reference.samples()[..n - delay];
    let e = &estimate.samples()[delay..];
    let ee: f64 = e.iter().map(|v| v * v).sum();
    let re: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
    let gain = if ee > 0.0 { re / ee } else { 0.0 };
    Ok(Aligned {
        reference: reference.with_samples(r.to_vec())?,
        estimate: estimate.with_samples(e.iter().map(|v| gain * v).collect())?,
        gain,
    })
}

/// Squared DFT magnitude of bin `k` of `x`, evaluated directly.
pub fn dft_bin_power(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let phase = -2.0 * PI * (k as f64) * (i as f64) / n;
        re += v * phase.cos();
        im += v * phase.sin();
    }
    re * re + im * im
}

/// DFT bin closest to `freq_hz` for a record of `n` samples.
pub fn bin_of(freq_hz: f64, n: usize, sample_rate: f64) -> usize {
    (freq_hz * n as f64 / sample_rate).round() as usize
}

/// Index of the strongest positive-frequency DFT bin, DC excluded.
pub fn dominant_bin(x: &[f64]) -> usize {
    let n = x.len();
    if n < 3 {
        return 0;
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (1..=n / 2)
        .max_by(|&a, &b| buf[a].norm_sqr().total_cmp(&buf[b].norm_sqr()))
        .unwrap_or(0)
}

/// Robust white-noise standard deviation from first differences:
/// `MAD(Δy) / (√2 · 0.6745)`.
pub fn robust_noise_sigma(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&diffs);
    let dev: Vec<f64> = diffs.iter().map(|d| (d - med).abs()).collect();
    median(&dev) / (std::f64::consts::SQRT_2 * 0.6745)
}

/// Exact median; the mean of the two central order statistics for even
/// lengths. Returns 0 for an empty slice.
pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
