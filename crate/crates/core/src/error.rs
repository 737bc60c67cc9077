use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("points and labels differ in length ({points} points, {labels} labels)")]
    LengthMismatch { points: usize, labels: usize },

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("index {index} out of bounds for precomputed matrix of side {side}")]
    OutOfBounds { index: usize, side: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
