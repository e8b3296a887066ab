//! Signal enhancement for weak periodic and keyed signals in heavy noise.
//!
//! The default chain clips impulses, denoises with one-dimensional non-local
//! means and sharpens with a filter built from a fourth-order cumulant slice.
//! A bistable stochastic-resonance stage can be enabled in front of the
//! denoiser.

pub mod bsr;
pub mod cumulant;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod inp;
pub mod metrics;
pub mod nlm;
pub mod noise;
pub mod pipeline;
pub mod signal;
pub mod stft;
pub mod synth;

pub use error::{Error, Result, Stage};
pub use pipeline::{enhance, enhance_traced, PipelineConfig};
pub use signal::Signal;
