use thiserror::Error;

/// Errors raised by the expansion, estimation and bridge routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("value {value} lies outside [-1, 1]")]
    OutOfDomain { value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("binary column `{column}` has {levels} distinct levels, expected at most 2")]
    TooManyLevels { column: String, levels: usize },

    #[error("column `{column}` row {row}: cannot parse `{value}` as a number")]
    Parse {
        column: String,
        row: usize,
        value: String,
    },

    #[error("empty data")]
    EmptyData,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("response value {value} at row {row} is not -1 or +1")]
    InvalidResponse { row: usize, value: i64 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("singular design: {} empty cell(s) {cells:?}; use the Moore-Penrose or ridge estimator", cells.len())]
    SingularDesign { cells: Vec<usize> },

    #[error("ridge penalty must be positive, got {0}")]
    InvalidLambda(f64),

    #[error("separation: cell {cell} has expectation {value}; GLM coefficients do not exist")]
    Separation { cell: usize, value: f64 },

    #[error("link inverse returned {value} outside (-1, 1) at linear predictor {eta}")]
    LinkRange { eta: f64, value: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, BeliefError>;
