use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("invalid ADE symbol `{0}`")]
    Symbol(String),
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("lattice is not negative definite")]
    NotDefinite,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("code {0} is outside [0, 2^22)")]
    CodeRange(u64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse { input: input.to_string(), reason: reason.into() }
}
