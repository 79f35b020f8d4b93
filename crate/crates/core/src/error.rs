use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no real root for array point at eta = {eta} (discriminant {discriminant:.3e})")]
    NoRealRoot { eta: f64, discriminant: f64 },

    #[error("array element {index} failed: {source}")]
    Element {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("index out of range: {what} = {index} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("grid of {cells} cells exceeds the limit of {limit}")]
    GridTooLarge { cells: usize, limit: usize },

    #[error("non-finite field detected at step {step}")]
    NonFinite { step: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("doa {theta_deg:.3} deg failed: {source}")]
    Doa {
        theta_deg: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {key}: {msg}")]
    Config { key: String, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by user input rather than by a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }
}
