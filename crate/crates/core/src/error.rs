use thiserror::Error;

/// Errors raised across the library.
///
/// Callers map the variants onto exit codes: configuration and input problems
/// are user errors, while spectral and numerical failures come from the data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("spectral error: {0}")]
    Spectral(String),
    #[error("unsupported spectrum: {0}")]
    UnsupportedSpectrum(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for failures caused by the numerical content of the inputs rather
    /// than by malformed configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Spectral(_) | Error::UnsupportedSpectrum(_) | Error::Numerical(_) | Error::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
