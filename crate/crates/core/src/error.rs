use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (files, labels, records).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A density matrix or state failed a physicality check.
    #[error("unphysical state: {0}")]
    Unphysical(String),

    /// A numerical procedure could not produce a usable answer.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The maximum-likelihood optimiser ran out of iterations.
    #[error("maximum-likelihood reconstruction did not converge after {iterations} iterations (last relative improvement {last_improvement:.3e})")]
    NotConverged {
        iterations: usize,
        last_improvement: f64,
        best: Box<crate::tomography::TomographyResult>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
