//! Short-time Fourier magnitudes and the magnitude-domain estimator error.
//!
//! Transforms are unnormalized and two-sided: a frame of length `L` yields
//! `K = L` bins with `Σ_k |X_k|² = L·Σ_n (w(n)·x(n))²`.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            frame_len: 256,
            hop: 128,
            window: Window::Hann,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len == 0 {
            return Err(Error::invalid("frame length must be > 0"));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::invalid(format!(
                "hop {} must lie in 1..={}",
                self.hop, self.frame_len
            )));
        }
        Ok(())
    }
}

/// Per-frame magnitudes and phases, `frames × bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct StftFrameSet {
    pub magnitudes: Vec<Vec<f64>>,
    pub phases: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop: usize,
}

impl StftFrameSet {
    pub fn frames(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn bins(&self) -> usize {
        self.frame_len
    }

    /// Writes magnitudes as CSV, one frame per row.
    pub fn write_magnitudes_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in &self.magnitudes {
            out.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Context vector for frame `n`: the `2N + 1` magnitude frames centred at
    /// `n`, concatenated. Frame indices past either end are clamped.
    pub fn context(&self, n: usize, half: usize) -> Vec<f64> {
        let last = self.frames() as isize - 1;
        let mut v = Vec::with_capacity((2 * half + 1) * self.bins());
        for off in -(half as isize)..=(half as isize) {
            let idx = (n as isize + off).clamp(0, last) as usize;
            v.extend_from_slice(&self.magnitudes[idx]);
        }
        v
    }
}

pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

pub fn stft(s: &Signal, params: &StftParams) -> Result<StftFrameSet> {
    params.validate()?;
    let l = params.frame_len;
    if s.len() < l {
        return Err(Error::TooShort {
            need: l - 1,
            got: s.len(),
        });
    }
    let win = params.window.coefficients(l);
    let fft = FftPlanner::new().plan_fft_forward(l);
    let frames = frame_count(s.len(), l, params.hop);
    let mut magnitudes = Vec::with_capacity(frames);
    let mut phases = Vec::with_capacity(frames);
    let mut buf = vec![Complex::new(0.0, 0.0); l];
    for f in 0..frames {
        let start = f * params.hop;
        for (b, (x, w)) in buf.iter_mut().zip(s.samples()[start..start + l].iter().zip(&win)) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        magnitudes.push(buf.iter().map(|c| c.norm()).collect());
        phases.push(buf.iter().map(|c| c.arg()).collect());
    }
    Ok(StftFrameSet {
        magnitudes,
        phases,
        frame_len: l,
        hop: params.hop,
    })
}

/// `Σ_k (est_k − ref_k)²`.
pub fn frame_error(est: &[f64], reference: &[f64]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: est.len(),
            right: reference.len(),
        });
    }
    Ok(est
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// An enhancement function under evaluation.
pub enum Estimator<'a> {
    /// Maps the noisy waveform to an enhanced waveform.
    TimeDomain(&'a dyn Fn(&Signal) -> Result<Signal>),
    /// Maps the context vector of noisy magnitude frames around frame `n`
    /// to an estimate of the clean magnitude frame `n` (`K` values).
    FrameBased(&'a dyn Fn(&[f64]) -> Result<Vec<f64>>),
}

/// Mean over frames of the magnitude error between the estimate and the
/// clean reference.
pub fn estimator_error(
    f: &Estimator<'_>,
    noisy: &Signal,
    clean: &Signal,
    params: &StftParams,
    context_half: usize,
) -> Result<f64> {
    clean.ensure_same_len(noisy)?;
    let reference = stft(clean, params)?;
    let total = match f {
        Estimator::TimeDomain(enhance) => {
            let estimate = stft(&enhance(noisy)?, params)?;
            if estimate.frames() != reference.frames() {
                return Err(Error::LengthMismatch {
                    left: estimate.frames(),
                    right: reference.frames(),
                });
            }
            estimate
                .magnitudes
                .iter()
                .zip(&reference.magnitudes)
                .map(|(e, r)| frame_error(e, r))
                .sum::<Result<f64>>()?
        }
        Estimator::FrameBased(map) => {
            let observed = stft(noisy, params)?;
            let mut acc = 0.0;
            for (n, r) in reference.magnitudes.iter().enumerate() {
                let est = map(&observed.context(n, context_half))?;
                acc += frame_error(&est, r)?;
            }
            acc
        }
    };
    Ok(total / reference.frames() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize, period: f64, phase: f64) -> Signal {
        Signal::new(
            (0..n)
                .map(|i| (2.0 * PI * i as f64 / period + phase).cos())
                .collect(),
            8000.0,
        )
        .unwrap()
    }

    /// Direct O(L²) DFT magnitudes, independent of the FFT path.
    fn direct_dft_magnitudes(x: &[f64]) -> Vec<f64> {
        let l = x.len() as f64;
        (0..x.len())
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in x.iter().enumerate() {
                    let ph = -2.0 * PI * k as f64 * n as f64 / l;
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn frame_geometry() {
        let s = tone(1000, 16.0, 0.0);
        let set = stft(&s, &StftParams::default()).unwrap();
        assert_eq!(set.frames(), (1000 - 256) / 128 + 1);
        assert_eq!(set.bins(), 256);
        assert!(stft(&tone(100, 16.0, 0.0), &StftParams::default()).is_err());
        let bad = StftParams {
            hop: 300,
            ..StftParams::default()
        };
        assert!(stft(&s, &bad).is_err());
    }

    #[test]
    fn zero_signal_has_zero_magnitudes() {
        let s = Signal::new(vec![0.0; 600], 8000.0).unwrap();
        let set = stft(&s, &StftParams::default()).unwrap();
        assert!(set.magnitudes.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn bin_centred_tone_matches_direct_dft() {
        let params = StftParams {
            frame_len: 64,
            hop: 64,
            window: Window::Rectangular,
        };
        // Period 8 in a 64-sample frame: bins 8 and 56.
        let s = tone(128, 8.0, 0.3);
        let set = stft(&s, &params).unwrap();
        for (f, mags) in set.magnitudes.iter().enumerate() {
            let oracle = direct_dft_magnitudes(&s.samples()[f * 64..f * 64 + 64]);
            for (a, b) in mags.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9);
            }
            let peak = (0..32).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
            assert_eq!(peak, 8);
            assert!((mags[8] - 32.0).abs() < 1e-9);
        }
    }

    #[test]
    fn frame_error_examples() {
        let r = [0.5, 1.0, 2.0, 0.0];
        assert_eq!(frame_error(&r, &r).unwrap(), 0.0);
        let shifted: Vec<f64> = r.iter().map(|v| v + 1.0).collect();
        assert_eq!(frame_error(&shifted, &r).unwrap(), 4.0);
        assert_eq!(
            frame_error(&[1.0, -2.0, 0.5], &[0.0, 1.0, 0.25]).unwrap(),
            1.0 + 9.0 + 0.0625
        );
        assert!(frame_error(&r, &r[..3]).is_err());
    }

    #[test]
    fn estimator_error_trivial_cases() {
        let s = tone(1024, 16.0, 0.0);
        let params = StftParams::default();
        let identity = |y: &Signal| Ok(y.clone());
        assert_eq!(
            estimator_error(&Estimator::TimeDomain(&identity), &s, &s, &params, 2).unwrap(),
            0.0
        );
        let zero = |y: &Signal| y.scaled(0.0);
        let set = stft(&s, &params).unwrap();
        let energy = set
            .magnitudes
            .iter()
            .map(|f| f.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / set.frames() as f64;
        let got = estimator_error(&Estimator::TimeDomain(&zero), &s, &s, &params, 2).unwrap();
        assert!((got - energy).abs() <= 1e-12 * energy);
    }

    #[test]
    fn frame_based_estimator_sees_context() {
        let s = tone(1024, 16.0, 0.0);
        let params = StftParams::default();
        let half = 2;
        let k = params.frame_len;
        // Picks the centre frame out of the context: exact reconstruction.
        let centre = move |ctx: &[f64]| {
            assert_eq!(ctx.len(), (2 * half + 1) * k);
            Ok(ctx[half * k..(half + 1) * k].to_vec())
        };
        let err = estimator_error(&Estimator::FrameBased(&centre), &s, &s, &params, half).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn context_clamps_at_edges() {
        let set = StftFrameSet {
            magnitudes: vec![vec![0.0], vec![1.0], vec![2.0]],
            phases: vec![vec![0.0]; 3],
            frame_len: 1,
            hop: 1,
        };
        assert_eq!(set.context(0, 1), vec![0.0, 0.0, 1.0]);
        assert_eq!(set.context(2, 2), vec![0.0, 1.0, 2.0, 2.0, 2.0]);
    }
}
