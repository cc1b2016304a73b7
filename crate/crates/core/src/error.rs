use thiserror::Error;

#[derive(Debug, Error)]
pub enum UpliftError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numerical failure in {context}: {detail} (condition estimate {condition:.3e})")]
    Numerical {
        context: &'static str,
        detail: String,
        condition: f64,
    },

    #[error("model format error on line {line}: {detail}")]
    Format { line: usize, detail: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, UpliftError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(UpliftError::InvalidInput(msg.into()))
}
