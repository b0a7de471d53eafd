use thiserror::Error;

/// Errors produced by the collocation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported Bessel order {0}: only integer and half-integer orders are available")]
    UnsupportedOrder(f64),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("assembly error at row {row}: {reason}")]
    Assembly { row: usize, reason: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing history: {0}")]
    MissingHistory(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
