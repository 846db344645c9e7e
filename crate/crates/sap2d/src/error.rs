use thiserror::Error;

/// Crate-wide error type. The three variants correspond to the CLI exit
/// codes: validation → 1, numerical → 2, I/O → 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: bad geometry, malformed config, out-of-range argument.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical gate tripped at run time (adiabaticity, norm, populations).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
