use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator produced a non-finite value")]
    NonFinite,

    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("singular linear system")]
    Singular,

    #[error("operator is not affine")]
    NotAffine,

    #[error("sequence is adaptive and needs the learner's play")]
    AdaptiveSequence,

    #[error("sequence has no period")]
    NotPeriodic,

    #[error("missing solutions in trajectory")]
    MissingSolutions,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("bound undefined: {0}")]
    BoundDomain(String),

    #[error("map does not send [{lo}, {hi}] into itself (image point {image} at x = {at})")]
    NotIntervalMap { lo: f64, hi: f64, at: f64, image: f64 },

    #[error("all orbits diverged")]
    AllDiverged,
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
