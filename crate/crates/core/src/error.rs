use thiserror::Error;

/// Errors shared across the crate.
///
/// Anything that reaches the CLI is rendered through `Display`; the variants
/// distinguish bad inputs (rejected up front) from I/O and format problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("residue {value} out of range for modulus {modulus}")]
    ResidueRange { value: u64, modulus: u64 },

    #[error("no inverse: {0}")]
    NotInvertible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("table format error: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
