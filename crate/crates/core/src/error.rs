use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid box: lower bound exceeds upper bound at coordinate {0}")]
    InvalidBox(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mixing matrix construction failed: {0}")]
    MixingConstruction(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("oracle access out of phase: round {requested} requested before decisions of round {committed} were committed")]
    PhaseViolation { requested: usize, committed: usize },
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
