use std::path::PathBuf;

use thiserror::Error;

/// What went wrong while reading a pipeline document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DocFault {
    Syntax,
    Structure,
    UnknownOperator(String),
    DanglingRef(String),
    Cycle,
    DuplicateId,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Doc { fault: DocFault, item: Option<String>, line: usize, msg: String },
    #[error("run config line {line}: {msg}")]
    ConfigFormat { line: usize, msg: String },
    #[error("run config: {0}")]
    ConfigMissing(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: voxseg_core::Error },
    #[error("{source}")]
    Item { item: String, source: Box<Error> },
    #[error(transparent)]
    Core(#[from] voxseg_core::Error),
    #[error(transparent)]
    Sim(#[from] voxseg_sim::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Doc { .. } => "E_PARSE",
            Error::ConfigFormat { .. } => "E_FORMAT",
            Error::ConfigMissing(_) | Error::Input(_) => "E_INPUT",
            Error::Io { .. } => "E_IO",
            Error::File { source, .. } | Error::Core(source) => source.code(),
            Error::Item { source, .. } => source.code(),
            Error::Sim(e) => e.code(),
        }
    }

    /// Item the error belongs to, if any.
    pub fn item_id(&self) -> Option<&str> {
        match self {
            Error::Doc { item, .. } => item.as_deref(),
            Error::Item { item, .. } => Some(item),
            _ => None,
        }
    }

    /// The single machine readable line printed by the command line tool.
    pub fn report_line(&self) -> String {
        format!("ERROR {} {} {}", self.code(), self.item_id().unwrap_or("-"), self)
    }

    pub(crate) fn in_item(self, item: &str) -> Self {
        match self {
            e @ Error::Item { .. } => e,
            e => Error::Item { item: item.to_string(), source: Box::new(e) },
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
