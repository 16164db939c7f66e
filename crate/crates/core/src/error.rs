use thiserror::Error;

/// Errors raised by sample validation, table construction and the test drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Row and column are 1-based.
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("sample has {n} observation(s); at least 2 are required")]
    TooSmall { n: usize },

    #[error("sample has no columns")]
    Empty,

    #[error("row {row} has {found} column(s), expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("direction count must be at least 1")]
    InvalidM,

    #[error("replicate count must be at least 1")]
    InvalidN,

    #[error("the uniform-simulation method requires univariate data (d = 1), got d = {d}")]
    SimRequiresUnivariate { d: usize },

    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A key = value specification file could not be understood.
    #[error("line {line}: key '{key}': {message}")]
    Spec {
        line: usize,
        key: String,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
