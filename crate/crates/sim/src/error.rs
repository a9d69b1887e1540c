use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: voxseg_core::Error },
    #[error(transparent)]
    Core(#[from] voxseg_core::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "E_INPUT",
            Error::Io { .. } => "E_IO",
            Error::File { source, .. } | Error::Core(source) => source.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn at<T>(path: impl Into<PathBuf>, r: voxseg_core::Result<T>) -> Result<T> {
    r.map_err(|source| Error::File { path: path.into(), source })
}

pub(crate) fn io_at<T>(path: impl Into<PathBuf>, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|source| Error::Io { path: path.into(), source })
}
