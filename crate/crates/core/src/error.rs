use thiserror::Error;

/// Errors produced anywhere in the simulation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("codeword difference matrix is rank deficient: rank {rank} < {paths} paths")]
    RankDeficient { rank: usize, paths: usize },

    #[error("fractional Doppler is not supported by the symbol-wise detector")]
    FractionalDoppler,

    #[error("enumeration of {combinations} interferer hypotheses exceeds budget {budget}")]
    EnumerationBudget { combinations: usize, budget: usize },

    #[error("row {row} has {support} nonzero taps, more than the allowed {limit}")]
    SupportOverflow {
        row: usize,
        support: usize,
        limit: usize,
    },

    #[error("free-distance search exceeded its bound: {0}")]
    SearchBound(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
