//! Bistable stochastic-resonance stage and paired-sample dataset builder.
//!
//! The system is the quartic double well `dx/dt = a·x − b·x³ + s(t)`, where
//! `s(t)` is the input signal (noise already included) held constant over
//! each sample period. Integration is forward Euler.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bin_of, dft_bin_power};
use crate::noise::{add_noise, NoiseSpec};
use crate::signal::Signal;
use crate::synth::{generate, ModulationSpec};

/// Upper bound on `dt·a`.
pub const STABILITY_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsrSystem {
    pub a: f64,
    pub b: f64,
    /// Largest integration step, seconds.
    pub dt: f64,
    pub x0: f64,
}

impl Default for BsrSystem {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            dt: 0.01,
            x0: 0.0,
        }
    }
}

impl BsrSystem {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::invalid("bistable coefficients a and b must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("integration step must be > 0"));
        }
        if self.dt * self.a >= STABILITY_MARGIN {
            return Err(Error::invalid(format!(
                "dt·a = {} violates the stability margin {STABILITY_MARGIN}",
                self.dt * self.a
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("initial state must be finite"));
        }
        Ok(())
    }

    /// Stable equilibria sit at `±√(a/b)`.
    pub fn well_position(&self) -> f64 {
        (self.a / self.b).sqrt()
    }

    fn divergence_bound(&self) -> f64 {
        10.0 * self.well_position()
    }

    /// Euler substeps per sample period and the resulting step length.
    /// The step never exceeds `dt`.
    pub fn substeps(&self, sample_rate: f64) -> (usize, f64) {
        let period = 1.0 / sample_rate;
        let k = (period / self.dt - 1e-9).ceil().max(1.0) as usize;
        (k, period / k as f64)
    }
}

/// Integrates the system driven by `input`; `output[n]` is the state at the
/// end of sample period `n`.
pub fn integrate(sys: &BsrSystem, input: &Signal) -> Result<Signal> {
    sys.validate()?;
    let (k, h) = sys.substeps(input.sample_rate());
    let bound = sys.divergence_bound();
    let mut x = sys.x0;
    let mut out = Vec::with_capacity(input.len());
    for (index, &s) in input.samples().iter().enumerate() {
        for _ in 0..k {
            x += h * (sys.a * x - sys.b * x * x * x + s);
        }
        if !(x.abs() <= bound) {
            return Err(Error::Divergence {
                index,
                value: x.abs(),
                bound,
            });
        }
        out.push(x);
    }
    input.with_samples(out)
}

/// One dataset entry: the clean sample and its stochastic-resonance output.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub pre: Signal,
    pub post: Signal,
    pub resonant: bool,
    pub carrier_hz: f64,
}

/// Carrier-bin DFT power of `post` exceeds that of `pre`.
pub fn is_resonant(pre: &Signal, post: &Signal, carrier_hz: f64) -> bool {
    let k = bin_of(carrier_hz, pre.len(), pre.sample_rate());
    dft_bin_power(post.samples(), k) > dft_bin_power(pre.samples(), k)
}

/// Parameters of a dataset run besides the modulations themselves.
#[derive(Debug, Clone, Copy)]
pub struct DatasetParams {
    pub sample_rate: f64,
    pub duration: f64,
    pub count: usize,
    pub seed: u64,
}

/// Builds `count` pairs, cycling through `mods`. Pair `i` uses noise seed
/// `seed + i`, so the dataset is reproducible and independent of thread
/// scheduling.
pub fn build_dataset(
    mods: &[ModulationSpec],
    sys: &BsrSystem,
    noise: &NoiseSpec,
    params: DatasetParams,
) -> Result<Vec<LabeledPair>> {
    if params.count == 0 {
        return Err(Error::invalid("dataset count must be > 0"));
    }
    if mods.is_empty() {
        return Err(Error::invalid("dataset needs at least one modulation"));
    }
    sys.validate()?;
    (0..params.count)
        .into_par_iter()
        .map(|i| {
            let spec = &mods[i % mods.len()];
            let pre = generate(spec, params.sample_rate, params.duration)?;
            let seed = params.seed.wrapping_add(i as u64);
            let noisy = add_noise(&pre, &noise.with_seed(seed))?;
            let post = integrate(sys, &noisy)?;
            let resonant = is_resonant(&pre, &post, spec.carrier_hz);
            Ok(LabeledPair {
                pre,
                post,
                resonant,
                carrier_hz: spec.carrier_hz,
            })
        })
        .collect()
}

/// Writes `pairs.csv` (`id,resonant,carrier_hz`) and `pair_<id>_pre.sgnl` /
/// `pair_<id>_post.sgnl` into `dir`.
pub fn export_dataset(pairs: &[LabeledPair], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut index = csv::Writer::from_path(dir.join("pairs.csv"))?;
    index.write_record(["id", "resonant", "carrier_hz"])?;
    for (id, pair) in pairs.iter().enumerate() {
        pair.pre.write_sgnl(dir.join(format!("pair_{id}_pre.sgnl")))?;
        pair.post.write_sgnl(dir.join(format!("pair_{id}_post.sgnl")))?;
        index.write_record([
            id.to_string(),
            pair.resonant.to_string(),
            format!("{:?}", pair.carrier_hz),
        ])?;
    }
    index.flush()?;
    Ok(())
}
