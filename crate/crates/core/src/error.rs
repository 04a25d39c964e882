use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrspError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solution error: {0}")]
    Solution(String),
    #[error("unsupported format version: {0}")]
    Version(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TrspError>;
