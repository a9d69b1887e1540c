use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine readable code, used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "E_INPUT",
            Error::Contract(_) => "E_CONTRACT",
            Error::Degenerate(_) => "E_DEGENERATE",
            Error::Parse { .. } => "E_PARSE",
            Error::Format(_) => "E_FORMAT",
            Error::Io(_) => "E_IO",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<tiff::TiffError> for Error {
    fn from(e: tiff::TiffError) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
