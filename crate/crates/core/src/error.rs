use std::io;

use thiserror::Error;

/// Errors produced anywhere in the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible shape: {0}")]
    IncompatibleShape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("inconsistent IDX pair: {images} images but {labels} labels")]
    InconsistentPair { images: usize, labels: usize },

    #[error("numeric error in segment `{segment}`: {detail}")]
    Numeric { segment: String, detail: String },

    #[error("client {client} failed in round {round}: {source}")]
    ClientFailure {
        round: usize,
        client: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::IncompatibleShape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the user's configuration rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
