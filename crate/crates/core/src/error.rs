use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("test function basis does not match space {0}")]
    SpaceMismatch(String),

    #[error("positions {i} and {j} coincide; em is not injective there")]
    NotInjective { i: usize, j: usize },

    #[error("coincident atoms {i} and {j}: interaction energy is singular")]
    Singular { i: usize, j: usize },

    #[error(
        "step rejected at t = {time}: particles {i} and {j} at distance {distance:e} (drift blow-up)"
    )]
    StepRejected {
        time: f64,
        i: usize,
        j: usize,
        distance: f64,
    },

    #[error("support of {got} atoms exceeds cap of {cap}; use a Sinkhorn bound instead")]
    SupportTooLarge { got: usize, cap: usize },

    #[error("unbalanced masses: {left} vs {right}")]
    Unbalanced { left: f64, right: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("test not applicable: {0}")]
    NotApplicable(String),

    #[error("observable threshold {eps} does not exceed the truncation tail mass {tail}")]
    Validity { eps: f64, tail: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
