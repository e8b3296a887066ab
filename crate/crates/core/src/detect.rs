//! Dilated 1D convolution with receptive-field accounting, and the two-class
//! softmax detection head over a pluggable feature scorer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Kernel length of the reference three-layer stack.
pub const STACK_KERNEL_LEN: usize = 3;
/// Dilations of the reference three-layer stack.
pub const STACK_DILATIONS: [usize; 3] = [1, 2, 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatedConvLayer {
    taps: Vec<f64>,
    dilation: usize,
}

impl DilatedConvLayer {
    pub fn new(taps: Vec<f64>, dilation: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("dilated convolution needs at least one tap"));
        }
        if dilation == 0 {
            return Err(Error::invalid("dilation must be >= 1"));
        }
        Ok(Self { taps, dilation })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn dilation(&self) -> usize {
        self.dilation
    }

    /// Span of input samples seen by one output of this layer alone.
    pub fn span(&self) -> usize {
        (self.taps.len() - 1) * self.dilation + 1
    }
}

/// `out(n) = Σ_t taps(t)·x(n − t·r)`, zero-padded on the left; output length
/// equals input length.
pub fn dilated_conv(layer: &DilatedConvLayer, x: &Signal) -> Result<Signal> {
    let xs = x.samples();
    let r = layer.dilation;
    let out = (0..xs.len())
        .map(|n| {
            layer
                .taps
                .iter()
                .enumerate()
                .take_while(|(t, _)| t * r <= n)
                .map(|(t, w)| w * xs[n - t * r])
                .sum()
        })
        .collect();
    x.with_samples(out)
}

/// Receptive field of a stack of layers with the given kernel length and
/// dilations: `1 + Σ (k − 1)·r`.
pub fn stack_receptive_field(kernel_len: usize, dilations: &[usize]) -> usize {
    1 + dilations.iter().map(|r| (kernel_len - 1) * r).sum::<usize>()
}

/// Cumulative receptive field after layer `layer_index` (1-based) of the
/// reference stack: kernel 3, dilations 1, 2, 4. Equals `2^(i+1) − 1`.
pub fn receptive_field(layer_index: usize) -> Result<usize> {
    if !(1..=STACK_DILATIONS.len()).contains(&layer_index) {
        return Err(Error::invalid(format!(
            "layer index {layer_index} outside 1..={}",
            STACK_DILATIONS.len()
        )));
    }
    Ok(stack_receptive_field(
        STACK_KERNEL_LEN,
        &STACK_DILATIONS[..layer_index],
    ))
}

/// Two-class classifier output. Index 0 of `logits` is the signal class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorOutput {
    pub p_signal: f64,
    pub p_noise: f64,
    pub logits: [f64; 2],
}

/// Softmax over `[signal, noise]` logits with max subtraction.
pub fn softmax2(logits: [f64; 2]) -> Result<DetectorOutput> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("softmax logits must be finite"));
    }
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    Ok(DetectorOutput {
        p_signal: e0 / z,
        p_noise: e1 / z,
        logits,
    })
}

/// Maps a waveform to `[signal, noise]` logits.
pub trait FeatureScorer {
    fn score(&self, y: &Signal) -> Result<[f64; 2]>;
}

pub const DEFAULT_NOISE_FLOOR: f64 = 0.01;

/// Energy detector: `logit_signal = ln(mean power / floor)`, `logit_noise = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyScorer {
    pub floor: f64,
}

impl Default for EnergyScorer {
    fn default() -> Self {
        Self {
            floor: DEFAULT_NOISE_FLOOR,
        }
    }
}

impl EnergyScorer {
    pub fn new(floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::invalid(format!("noise floor must be > 0, got {floor}")));
        }
        Ok(Self { floor })
    }
}

impl FeatureScorer for EnergyScorer {
    fn score(&self, y: &Signal) -> Result<[f64; 2]> {
        // Silence maps to a large negative but finite logit.
        let power = y.mean_power().max(f64::MIN_POSITIVE);
        Ok([(power / self.floor).ln(), 0.0])
    }
}

pub fn detect<S: FeatureScorer + ?Sized>(y: &Signal, scorer: &S) -> Result<DetectorOutput> {
    softmax2(scorer.score(y)?)
}
