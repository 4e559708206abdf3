use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("accuracy not reached: {what} (achieved estimate {estimate:.3e})")]
    Accuracy { what: String, estimate: f64 },
    #[error("range error: {0}")]
    Range(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Usage and input errors (as opposed to numerical failures).
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_) | Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
