use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// The first-lemma iteration exponent does not exceed one.
    #[error("non-contractive iteration: exponent {alpha} must exceed 1")]
    NonContractive { alpha: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numerical divergence at step {step} (t = {time}): non-finite value")]
    Divergence { step: usize, time: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    /// Process exit code for this error under the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            _ => 2,
        }
    }
}
