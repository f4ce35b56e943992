use std::path::PathBuf;

use thiserror::Error;

use crate::image::ColorSpace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode PNG: {0}")]
    PngDecode(String),

    #[error("cannot encode PNG: {0}")]
    PngEncode(String),

    #[error("unsupported PNG: {0}")]
    UnsupportedPng(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("expected a {expected} image, got {actual}")]
    WrongColorSpace {
        expected: ColorSpace,
        actual: ColorSpace,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluator `{0}` is already registered")]
    DuplicateEvaluator(String),

    #[error("unknown evaluator `{0}`")]
    UnknownEvaluator(String),

    #[error("NIQE model: {0}")]
    NiqeModel(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
