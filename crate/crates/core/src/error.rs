use thiserror::Error;

/// Failures surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate patch: {0}")]
    DegeneratePatch(String),

    #[error("patch touches the unit circle: {0}")]
    BoundaryContact(String),

    #[error("invariant violated ({name}): {detail}")]
    Invariant { name: String, detail: String },

    #[error("integration aborted at t = {time}: {reason}")]
    Aborted {
        time: f64,
        reason: String,
        /// samples of r at the last accepted step
        last_valid: Vec<f64>,
    },

    #[error("no spectral peak above the noise floor for mode {0}")]
    NoFrequency(i64),

    #[error("root isolation failed: {0}")]
    RootIsolation(String),

    #[error("empty index range: {0}")]
    EmptyIndexRange(String),

    #[error("reduction step failed: {0}")]
    StepFailure(String),

    #[error("non-reducible: {0}")]
    NonReducible(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn invariant(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invariant {
            name: name.into(),
            detail: detail.into(),
        }
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::EmptyIndexRange(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
