use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("agents out of sync: {0}")]
    Desync(String),

    #[error("heterogeneous agents: {0}")]
    Heterogeneous(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("invalid environment: {0}")]
    InvalidEnv(String),

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed {what}: {msg}")]
    Parse { what: &'static str, msg: String },

    #[error("statistics: {0}")]
    Statistics(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn shape(context: &'static str, expected: usize, got: usize) -> Self {
        Error::ShapeMismatch {
            context,
            expected,
            got,
        }
    }
}
