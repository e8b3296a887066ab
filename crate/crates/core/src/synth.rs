//! Deterministic test-signal synthesis and the matching coherent demodulator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Bpsk,
    Bfsk,
    Sine,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Scheme::Bpsk),
            "bfsk" => Ok(Scheme::Bfsk),
            "sine" => Ok(Scheme::Sine),
            other => Err(Error::invalid(format!(
                "unknown scheme '{other}' (expected bpsk, bfsk or sine)"
            ))),
        }
    }
}

/// What to synthesize.
///
/// Keyed schemes cycle through `payload_bits` when the requested duration
/// outlasts the payload. BFSK sends bit 0 at `carrier_hz` and bit 1 at
/// `carrier_hz + symbol_rate` with continuous phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    pub scheme: Scheme,
    pub carrier_hz: f64,
    pub symbol_rate: f64,
    pub payload_bits: Vec<u8>,
    /// Peak amplitude of the carrier.
    pub amplitude: f64,
}

impl ModulationSpec {
    pub fn sine(carrier_hz: f64) -> Self {
        Self {
            scheme: Scheme::Sine,
            carrier_hz,
            symbol_rate: 0.0,
            payload_bits: Vec::new(),
            amplitude: 1.0,
        }
    }

    pub fn bpsk(carrier_hz: f64, symbol_rate: f64, payload_bits: Vec<u8>) -> Self {
        Self {
            scheme: Scheme::Bpsk,
            carrier_hz,
            symbol_rate,
            payload_bits,
            amplitude: 1.0,
        }
    }

    pub fn bfsk(carrier_hz: f64, symbol_rate: f64, payload_bits: Vec<u8>) -> Self {
        Self {
            scheme: Scheme::Bfsk,
            carrier_hz,
            symbol_rate,
            payload_bits,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn highest_tone(&self) -> f64 {
        match self.scheme {
            Scheme::Bfsk => self.carrier_hz + self.symbol_rate,
            _ => self.carrier_hz,
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude must be finite and non-negative"));
        }
        if self.highest_tone() >= sample_rate / 2.0 {
            return Err(Error::Nyquist {
                carrier_hz: self.highest_tone(),
                sample_rate,
            });
        }
        if self.scheme != Scheme::Sine {
            if !(self.symbol_rate > 0.0 && self.symbol_rate <= self.carrier_hz) {
                return Err(Error::invalid(format!(
                    "symbol rate {} must lie in (0, carrier {}]",
                    self.symbol_rate, self.carrier_hz
                )));
            }
            if self.payload_bits.is_empty() {
                return Err(Error::invalid("keyed scheme needs a non-empty payload"));
            }
            if self.payload_bits.iter().any(|&b| b > 1) {
                return Err(Error::invalid("payload bits must be 0 or 1"));
            }
        }
        Ok(())
    }

    /// Bit carried by sample `n`.
    fn bit_at(&self, n: usize, sample_rate: f64) -> u8 {
        let k = symbol_index(n, self.symbol_rate, sample_rate);
        self.payload_bits[k % self.payload_bits.len()]
    }
}

fn symbol_index(n: usize, symbol_rate: f64, sample_rate: f64) -> usize {
    (n as f64 * symbol_rate / sample_rate + 1e-9).floor() as usize
}

/// Number of samples in `duration` seconds at `sample_rate`.
pub fn sample_count(sample_rate: f64, duration: f64) -> usize {
    (duration * sample_rate + 1e-9).floor() as usize
}

pub fn generate(spec: &ModulationSpec, sample_rate: f64, duration: f64) -> Result<Signal> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    spec.validate(sample_rate)?;
    let n = sample_count(sample_rate, duration);
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }
    let amp = spec.amplitude;
    let omega = 2.0 * PI * spec.carrier_hz / sample_rate;
    let samples = match spec.scheme {
        Scheme::Sine => (0..n).map(|i| amp * (omega * i as f64).sin()).collect(),
        Scheme::Bpsk => (0..n)
            .map(|i| {
                let sign = if spec.bit_at(i, sample_rate) == 0 { 1.0 } else { -1.0 };
                sign * amp * (omega * i as f64).sin()
            })
            .collect(),
        Scheme::Bfsk => {
            let mut phase = 0.0_f64;
            (0..n)
                .map(|i| {
                    let v = amp * phase.sin();
                    let f = spec.carrier_hz + spec.symbol_rate * spec.bit_at(i, sample_rate) as f64;
                    phase = (phase + 2.0 * PI * f / sample_rate) % (2.0 * PI);
                    v
                })
                .collect()
        }
    };
    Signal::new(samples, sample_rate)
}

/// Coherent BPSK symbol decisions.
///
/// Each symbol window is correlated with the carrier after advancing the
/// signal by `delay` samples; `polarity` flips every decision when negative.
/// Only whole symbols that fit in the signal are decided, at most `nbits`.
pub fn demodulate_bpsk(
    y: &Signal,
    spec: &ModulationSpec,
    nbits: usize,
    delay: usize,
    polarity: f64,
) -> Result<Vec<u8>> {
    if spec.scheme != Scheme::Bpsk {
        return Err(Error::invalid("demodulate_bpsk needs a BPSK spec"));
    }
    let fs = y.sample_rate();
    spec.validate(fs)?;
    let omega = 2.0 * PI * spec.carrier_hz / fs;
    let x = y.samples();
    let mut sums = vec![0.0_f64; nbits];
    let mut complete = vec![false; nbits];
    let mut n = 0usize;
    while n + delay < x.len() {
        let k = symbol_index(n, spec.symbol_rate, fs);
        if k >= nbits {
            break;
        }
        sums[k] += x[n + delay] * (omega * n as f64).sin();
        let next = symbol_index(n + 1, spec.symbol_rate, fs);
        if next != k {
            complete[k] = true;
        }
        n += 1;
    }
    let decided = complete.iter().take_while(|&&c| c).count();
    Ok(sums[..decided]
        .iter()
        .map(|&s| if s * polarity.signum() >= 0.0 { 0 } else { 1 })
        .collect())
}

/// Number of whole symbols spanned by `n` samples.
pub fn whole_symbols(n: usize, symbol_rate: f64, sample_rate: f64) -> usize {
    symbol_index(n, symbol_rate, sample_rate)
}
