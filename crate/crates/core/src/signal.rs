//! Uniformly sampled real waveform and its on-disk formats.
//!
//! The binary `.sgnl` layout is an 8-byte header followed by the samples:
//!
//! | offset | size | content                              |
//! |--------|------|--------------------------------------|
//! | 0      | 4    | magic bytes `SGNL`                   |
//! | 4      | 4    | sample rate, `u32` little-endian, Hz |
//! | 8      | 8·N  | samples, `f64` little-endian         |
//!
//! The CSV form carries one sample per line and no sample rate.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default acquisition rate, Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 8000.0;

pub const SGNL_MAGIC: [u8; 4] = *b"SGNL";
pub const SGNL_HEADER_LEN: usize = 8;

/// A non-empty, finite, uniformly sampled waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal has no samples"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a signal at the same sample rate as `self`.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|v| v * factor).collect())
    }

    pub(crate) fn ensure_same_len(&self, other: &Signal) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    pub fn to_sgnl_bytes(&self) -> Result<Vec<u8>> {
        let rate = self.sample_rate;
        if rate.fract() != 0.0 || rate > u32::MAX as f64 {
            return Err(Error::invalid(format!(
                "sample rate {rate} is not representable as a u32 header field"
            )));
        }
        let mut out = Vec::with_capacity(SGNL_HEADER_LEN + 8 * self.samples.len());
        out.extend_from_slice(&SGNL_MAGIC);
        out.extend_from_slice(&(rate as u32).to_le_bytes());
        for v in &self.samples {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_sgnl_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < SGNL_HEADER_LEN {
            return Err(Error::Format {
                offset: bytes.len() as u64,
                message: format!("truncated header ({} of 8 bytes)", bytes.len()),
            });
        }
        if bytes[..4] != SGNL_MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {:02x?}, expected \"SGNL\"", &bytes[..4]),
            });
        }
        let rate = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice"));
        if rate == 0 {
            return Err(Error::Format {
                offset: 4,
                message: "sample rate is zero".into(),
            });
        }
        let body = &bytes[SGNL_HEADER_LEN..];
        if body.is_empty() {
            return Err(Error::Format {
                offset: SGNL_HEADER_LEN as u64,
                message: "no samples after header".into(),
            });
        }
        if body.len() % 8 != 0 {
            let offset = (SGNL_HEADER_LEN + body.len() - body.len() % 8) as u64;
            return Err(Error::Format {
                offset,
                message: format!("trailing {} bytes do not form a sample", body.len() % 8),
            });
        }
        let mut samples = Vec::with_capacity(body.len() / 8);
        for (k, chunk) in body.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            if !v.is_finite() {
                return Err(Error::Format {
                    offset: (SGNL_HEADER_LEN + 8 * k) as u64,
                    message: format!("non-finite sample {v}"),
                });
            }
            samples.push(v);
        }
        Self::new(samples, rate as f64)
    }

    pub fn write_sgnl(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_sgnl_bytes()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_sgnl(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_sgnl_bytes(&bytes)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.samples {
            // `{:?}` prints the shortest representation that round-trips.
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    /// Reads one sample per line; blank lines are skipped.
    pub fn read_csv<R: Read>(r: R, sample_rate: f64) -> Result<Self> {
        let mut samples = Vec::new();
        let mut offset = 0u64;
        for line in BufReader::new(r).lines() {
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                let v: f64 = trimmed.parse().map_err(|_| Error::Format {
                    offset,
                    message: format!("cannot parse sample '{trimmed}'"),
                })?;
                samples.push(v);
            }
            offset += line.len() as u64 + 1;
        }
        Self::new(samples, sample_rate)
    }

    /// Loads `.csv` files as CSV at `csv_rate`, anything else as `.sgnl`.
    pub fn load(path: impl AsRef<Path>, csv_rate: f64) -> Result<Self> {
        let path = path.as_ref();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::read_csv(std::fs::File::open(path)?, csv_rate)
        } else {
            Self::read_sgnl(path)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            let f = std::io::BufWriter::new(std::fs::File::create(path)?);
            self.write_csv(f)
        } else {
            self.write_sgnl(path)
        }
    }
}
