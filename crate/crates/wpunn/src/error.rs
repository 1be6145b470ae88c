//! Crate-wide error type.

use std::fmt;

/// Errors produced by tensors, layers, training, and data loading.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Shape or width mismatch; the message names both shapes.
    Dimension(String),
    /// Invalid layer or network configuration (e.g. window wider than input).
    Config(String),
    /// Input outside an operation's domain (e.g. product unit on x <= 0).
    Domain(String),
    /// Non-finite value or overflow during computation.
    Numeric(String),
    /// Invalid argument value (bad range, empty input, ...).
    Argument(String),
    /// API contract violation (e.g. backward from a non-scalar root).
    Contract(String),
    /// Malformed data file; the message names the offending offset or row.
    Format(String),
    /// Underlying I/O failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(m) => write!(f, "dimension error: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Argument(m) => write!(f, "argument error: {m}"),
            Error::Contract(m) => write!(f, "contract error: {m}"),
            Error::Format(m) => write!(f, "format error: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
