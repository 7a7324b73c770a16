use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpamError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("profile integral diverges for delta = {0} (need delta > 1)")]
    DivergentIntegral(f64),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("neighbourhood of {size} vertices exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpamError {
    fn from(e: std::io::Error) -> Self {
        SpamError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpamError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpamError::Argument(msg.into()))
}
