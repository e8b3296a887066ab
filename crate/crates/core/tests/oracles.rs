//! Brute-force reference implementations checked against the library.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigenhance::cumulant::{apply, build_filter, estimate_slice, CumulantFilter, CumulantSlice};
use sigenhance::detect::{dilated_conv, DilatedConvLayer};
use sigenhance::nlm::{denoise, NlmConfig};
use sigenhance::noise::NoiseSpec;
use sigenhance::stft::{stft, StftParams, Window};
use sigenhance::Signal;

mod common;
use common::naive_nlm;

fn sig(v: Vec<f64>) -> Signal {
    Signal::new(v, 8000.0).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn nlm_matches_naive_reference_including_whole_search_and_gaussian_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    for case in 0..60 {
        let n = rng.random_range(1..=48);
        let y = random_vec(&mut rng, n);
        let p = rng.random_range(0..=3);
        let s = if case % 3 == 0 { None } else { Some(rng.random_range(p..=p + 6)) };
        let h = rng.random_range(0.05..2.0);
        let sigma = if case % 2 == 0 { 0.0 } else { rng.random_range(0.5..3.0) };
        let cfg = NlmConfig {
            patch_half_width: p,
            search_half_width: s,
            h: Some(h),
            kernel_sigma: sigma,
        };
        let got = denoise(&sig(y.clone()), &cfg).unwrap();
        for (a, b) in got.samples().iter().zip(naive_nlm(&y, p, s, h, sigma)) {
            assert!((a - b).abs() <= 1e-12, "case {case}: {a} vs {b}");
        }
    }
}

fn naive_conv(taps: &[f64], gain: f64, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for n in 0..x.len() {
        for (m, t) in taps.iter().enumerate() {
            if m <= n {
                out[n] += t * x[n - m];
            }
        }
        out[n] *= gain;
    }
    out
}

#[test]
fn fir_apply_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let len = rng.random_range(1..=9);
        let taps = random_vec(&mut rng, len);
        let len = rng.random_range(1..=32);
        let x = random_vec(&mut rng, len);
        let gain = rng.random_range(0.1..3.0);
        let f = CumulantFilter::from_taps(taps.clone(), gain).unwrap();
        let got = apply(&f, &sig(x.clone())).unwrap();
        for (a, b) in got.samples().iter().zip(naive_conv(&taps, gain, &x)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn filter_examples() {
    let f = build_filter(&CumulantSlice::new(vec![2.0, -1.0]).unwrap()).unwrap();
    assert_eq!(f.taps(), &[-1.0, 2.0, -1.0]);
    assert_eq!(f.group_delay(), 1);
    let f = build_filter(&CumulantSlice::new(vec![0.3]).unwrap()).unwrap();
    assert_eq!(f.taps(), &[0.3]);
    assert!(build_filter(&CumulantSlice::new(vec![0.0; 4]).unwrap()).is_err());

    let x = sig(vec![1.0, 2.0, 3.0]);
    let id = CumulantFilter::from_taps(vec![1.0], 1.0).unwrap();
    assert_eq!(apply(&id, &x).unwrap(), x);
    let delay = CumulantFilter::from_taps(vec![0.0, 1.0, 0.0], 1.0).unwrap();
    assert_eq!(apply(&delay, &x).unwrap().samples(), &[0.0, 1.0, 2.0]);
}

/// Slice from explicit moment sums, no shared code with the library.
fn direct_slice(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    (0..=max_lag)
        .map(|m| {
            let cnt = (n - m) as f64;
            let mut e31 = 0.0;
            let mut e11 = 0.0;
            let mut e2 = 0.0;
            for i in 0..n - m {
                e31 += d[i].powi(3) * d[i + m];
                e11 += d[i] * d[i + m];
                e2 += d[i].powi(2);
            }
            e31 / cnt - 3.0 * (e11 / cnt) * (e2 / cnt)
        })
        .collect()
}

#[test]
fn slice_matches_direct_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.random_range(40..400);
        let x: Vec<f64> = random_vec(&mut rng, n).iter().map(|v| v + 0.3).collect();
        let got = estimate_slice(&sig(x.clone()), 8).unwrap();
        for (a, b) in got.values().iter().zip(direct_slice(&x, 8)) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
    assert!(estimate_slice(&sig(vec![0.0; 100]), 4)
        .unwrap()
        .values()
        .iter()
        .all(|v| *v == 0.0));
    assert!(estimate_slice(&sig(vec![1.0; 16]), 4).is_err());
}

#[test]
fn gaussian_slice_within_monte_carlo_spread() {
    let n = 100_000;
    let lags = 6;
    let runs: Vec<Vec<f64>> = (0..100)
        .map(|seed| {
            let x = NoiseSpec::gaussian(1.0, seed).sample(n).unwrap();
            estimate_slice(&sig(x), lags).unwrap().values().to_vec()
        })
        .collect();
    let fresh = estimate_slice(&sig(NoiseSpec::gaussian(1.0, 5_000).sample(n).unwrap()), lags).unwrap();
    for m in 0..=lags {
        let mean = runs.iter().map(|r| r[m]).sum::<f64>() / runs.len() as f64;
        let var = runs.iter().map(|r| (r[m] - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64;
        let se = var.sqrt();
        assert!(fresh.values()[m].abs() <= 5.0 * se, "lag {m}: {} vs se {se}", fresh.values()[m]);
    }
}

fn naive_standard_conv(taps: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                if n >= t {
                    acc += w * x[n - t];
                }
            }
            acc
        })
        .collect()
}

#[test]
fn undilated_conv_is_standard_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..200 {
        let len = rng.random_range(1..=7);
        let taps = random_vec(&mut rng, len);
        let len = rng.random_range(1..=64);
        let x = random_vec(&mut rng, len);
        let layer = DilatedConvLayer::new(taps.clone(), 1).unwrap();
        let got = dilated_conv(&layer, &sig(x.clone())).unwrap();
        assert_eq!(got.samples(), naive_standard_conv(&taps, &x).as_slice());
    }
}

#[test]
fn dilated_conv_equals_zero_stuffed_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..100 {
        let len = rng.random_range(1..=4);
        let taps = random_vec(&mut rng, len);
        let r = rng.random_range(1..=5);
        let len = rng.random_range(1..=64);
        let x = random_vec(&mut rng, len);
        let mut stuffed = vec![0.0; (taps.len() - 1) * r + 1];
        for (t, w) in taps.iter().enumerate() {
            stuffed[t * r] = *w;
        }
        let got = dilated_conv(&DilatedConvLayer::new(taps, r).unwrap(), &sig(x.clone())).unwrap();
        for (a, b) in got.samples().iter().zip(naive_standard_conv(&stuffed, &x)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn stft_magnitudes_match_direct_dft_with_hann_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_vec(&mut rng, 200);
    let params = StftParams {
        frame_len: 32,
        hop: 24,
        window: Window::Hann,
    };
    let set = stft(&sig(x.clone()), &params).unwrap();
    assert_eq!(set.frames(), (200 - 32) / 24 + 1);
    for f in 0..set.frames() {
        let frame: Vec<f64> = (0..32)
            .map(|n| x[f * 24 + n] * (0.5 - 0.5 * (2.0 * PI * n as f64 / 32.0).cos()))
            .collect();
        for k in 0..32 {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in frame.iter().enumerate() {
                let ph = -2.0 * PI * (k * n) as f64 / 32.0;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            assert!((set.magnitudes[f][k] - re.hypot(im)).abs() < 1e-10);
        }
    }
}
