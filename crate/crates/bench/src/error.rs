use std::io;
use std::path::{Path, PathBuf};

use crate::runtime::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] srbench_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("invalid model config {path}:{}", diagnostics.iter().map(|d| format!("\n  {d}")).collect::<String>())]
    InvalidConfig {
        path: String,
        diagnostics: Vec<Diagnostic>,
    },

    #[error("duplicate model name `{0}`")]
    DuplicateModel(String),

    #[error("model `{model}`: {message}")]
    Runner { model: String, message: String },

    #[error("model `{model}` broke the runner protocol: {message}")]
    Protocol { model: String, message: String },

    #[error("model `{model}` returned a {got} image; expected {expected}")]
    DimensionContract {
        model: String,
        expected: String,
        got: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("{} already exists with different contents; use --force to overwrite", path.display())]
    Collision { path: PathBuf },

    #[error("record file: {0}")]
    Records(String),

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn json(path: impl AsRef<Path>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}
