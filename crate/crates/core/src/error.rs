use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, got {got}")]
    Arity {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("coordinate {coord} out of range for dimension {dim}")]
    Coordinate { coord: usize, dim: usize },
    #[error("resource cap exceeded: {0}")]
    Cap(String),
}

impl Error {
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::Cap(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
