//! Error type shared by all corrwalk modules.

use thiserror::Error;

/// Errors produced by lattice construction, evolution, analysis and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: malformed spec, out-of-range site, mismatched
    /// dimensions, bad file contents.
    #[error("validation error: {0}")]
    Validation(String),

    /// A requested object exceeds a configured size limit (dimension cap,
    /// integer overflow of a Hilbert-space dimension).
    #[error("resource error: {0}")]
    Resource(String),

    /// Numerical failure: non-finite matrix entries, eigendecomposition
    /// that did not converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
