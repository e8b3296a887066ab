//! The enhancement chain: INP → (optional BSR) → NLM → cumulant FIR.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bsr::{self, BsrSystem};
use crate::cumulant::{self, CumulantFilter, DEFAULT_MAX_LAG};
use crate::error::{Error, Result, Stage};
use crate::inp::{self, InpConfig};
use crate::nlm::{self, NlmConfig};
use crate::signal::Signal;

/// Stage settings; `None` disables a stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub inp: Option<InpConfig>,
    pub bsr: Option<BsrSystem>,
    pub nlm: Option<NlmConfig>,
    pub fir_lag: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inp: Some(InpConfig::default()),
            bsr: None,
            nlm: Some(NlmConfig::default()),
            fir_lag: Some(DEFAULT_MAX_LAG),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inp.is_none() && self.bsr.is_none() && self.nlm.is_none() && self.fir_lag.is_none()
        {
            return Err(Error::invalid("at least one stage must be enabled"));
        }
        if let Some(c) = &self.inp {
            c.validate().map_err(|e| e.in_stage(Stage::Inp))?;
        }
        if let Some(c) = &self.bsr {
            c.validate().map_err(|e| e.in_stage(Stage::Bsr))?;
        }
        if let Some(c) = &self.nlm {
            c.validate().map_err(|e| e.in_stage(Stage::Nlm))?;
        }
        Ok(())
    }

    /// Samples of delay added by the chain (the FIR's linear-phase delay).
    pub fn group_delay(&self) -> usize {
        self.fir_lag.unwrap_or(0)
    }
}

/// Compact one-line rendering used in reports and manifests.
impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inp {
            Some(c) => write!(f, "inp=tau0:{}", c.tau0)?,
            None => write!(f, "inp=off")?,
        }
        match &self.bsr {
            Some(b) => write!(f, ";bsr=a:{},b:{},dt:{},x0:{}", b.a, b.b, b.dt, b.x0)?,
            None => write!(f, ";bsr=off")?,
        }
        match &self.nlm {
            Some(c) => {
                write!(f, ";nlm=P:{}", c.patch_half_width)?;
                match c.search_half_width {
                    Some(s) => write!(f, ",S:{s}")?,
                    None => write!(f, ",S:all")?,
                }
                match c.h {
                    Some(h) => write!(f, ",h:{h}")?,
                    None => write!(f, ",h:auto")?,
                }
                write!(f, ",K:{}", c.kernel_sigma)?;
            }
            None => write!(f, ";nlm=off")?,
        }
        match self.fir_lag {
            Some(l) => write!(f, ";fir=L:{l}"),
            None => write!(f, ";fir=off"),
        }
    }
}

/// Runs the enabled stages in order. A failing stage is named in the error.
pub fn enhance(y: &Signal, cfg: &PipelineConfig) -> Result<Signal> {
    enhance_traced(y, cfg).map(|(x, _)| x)
}

/// Like [`enhance`], also returning the FIR designed for this input.
pub fn enhance_traced(y: &Signal, cfg: &PipelineConfig) -> Result<(Signal, Option<CumulantFilter>)> {
    cfg.validate()?;
    let mut x = y.clone();
    if let Some(c) = &cfg.inp {
        x = inp::inp(&x, c).map_err(|e| e.in_stage(Stage::Inp))?;
    }
    if let Some(sys) = &cfg.bsr {
        x = bsr::integrate(sys, &x).map_err(|e| e.in_stage(Stage::Bsr))?;
    }
    if let Some(c) = &cfg.nlm {
        x = nlm::denoise(&x, c).map_err(|e| e.in_stage(Stage::Nlm))?;
    }
    let mut filter = None;
    if let Some(l) = cfg.fir_lag {
        let (out, f) = cumulant::enhance_with_filter(&x, l).map_err(|e| e.in_stage(Stage::CumulantFir))?;
        x = out;
        filter = Some(f);
    }
    Ok((x, filter))
}

/// Element-wise mean of equal-length acquisitions.
pub fn coherent_average(signals: &[Signal]) -> Result<Signal> {
    let first = signals
        .first()
        .ok_or_else(|| Error::invalid("coherent average needs at least one signal"))?;
    let mut acc = vec![0.0; first.len()];
    for s in signals {
        first.ensure_same_len(s)?;
        for (a, v) in acc.iter_mut().zip(s.samples()) {
            *a += v;
        }
    }
    let k = signals.len() as f64;
    first.with_samples(acc.into_iter().map(|v| v / k).collect())
}
