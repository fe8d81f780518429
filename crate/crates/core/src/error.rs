use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The case file could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A parsed value violates a roster invariant.
    #[error("invalid ward `{ward}`, field `{field}`: {message}")]
    Validation {
        ward: String,
        field: String,
        message: String,
    },

    #[error("invalid case file: {0}")]
    InvalidCase(String),

    #[error("unknown ward `{0}`")]
    UnknownWard(String),

    #[error("degenerate component p-value: {0}")]
    DegeneratePValue(f64),

    #[error("cannot fit intensity 0: {0}")]
    ZeroIntensity(String),

    /// A computed probability left [0, 1] by more than rounding can explain.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
