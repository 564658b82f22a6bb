use thiserror::Error;

/// Errors raised by validation and by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix must have at least one row")]
    Empty,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("negative weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },

    #[error("invalid node set: {0}")]
    InvalidNodeSet(String),

    #[error("node set is not strongly connected")]
    NotStronglyConnected,

    #[error("invalid window [{k0}, {k1}]")]
    InvalidWindow { k0: usize, k1: usize },

    #[error("{n} nodes exceed the exhaustive cut limit of {limit}")]
    TooManyNodes { n: usize, limit: usize },

    #[error("negative disturbance {value} at step {step}, agent {agent}")]
    NegativeDisturbance { step: usize, agent: usize, value: f64 },

    #[error("invalid delay: {0}")]
    InvalidDelay(String),

    #[error("history holds {found} states, expected {expected}")]
    HistoryLength { expected: usize, found: usize },

    #[error("trajectory has {len} states, at least {required} required")]
    TooShort { len: usize, required: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("no fixed point found")]
    NoFixedPoint,

    #[error("degenerate set: {0}")]
    DegenerateSet(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
