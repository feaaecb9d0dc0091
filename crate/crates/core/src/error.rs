use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation (bad element id,
    /// nonpositive temperature, parameter outside the unit ball, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated an operation precondition (e.g. asked for the
    /// swap neighborhood of a dependent set).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An exhaustive enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: {0}")]
    Capacity(String),

    /// An experiment or model description is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
