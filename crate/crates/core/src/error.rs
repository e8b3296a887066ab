use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Processing stage of the enhancement chain, used to tag stage failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Inp,
    Bsr,
    Nlm,
    CumulantFir,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Inp => "inp",
            Stage::Bsr => "bsr",
            Stage::Nlm => "nlm",
            Stage::CumulantFir => "cumulant-fir",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("carrier {carrier_hz} Hz violates Nyquist for sample rate {sample_rate} Hz")]
    Nyquist { carrier_hz: f64, sample_rate: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal too short: need more than {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("zero energy: {0}")]
    ZeroEnergy(&'static str),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("integration diverged at sample {index}: |x| = {value} exceeds {bound} (step too large)")]
    Divergence { index: usize, value: f64, bound: f64 },

    #[error("malformed signal data at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("unknown scenario '{name}' (known: {known})")]
    UnknownScenario { name: String, known: String },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
