use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported operator order {0}; expected one of 2, 4, 6, 8")]
    UnsupportedOrder(usize),
    #[error("grid of {n} points is below the minimum of {min} for order {order}")]
    GridTooSmall { order: usize, n: usize, min: usize },
    #[error("grid spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("operator failed certification: {0}")]
    Certification(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix dimensions overflow: {0}")]
    DimensionOverflow(String),
    #[error("index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("matrix is singular or numerically singular")]
    SingularMatrix,
    #[error("iterative solver stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("boundary parameter alpha must be nonzero on every face")]
    ZeroAlpha,
    #[error("inadmissible penalty parameters: {0}")]
    InadmissiblePenalty(String),
    #[error("unsupported penalty parameters for this operation: {0}")]
    UnsupportedPenalty(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("line search failed after {iterations} iterations: {reason}")]
    LineSearchFailure { iterations: usize, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
