use thiserror::Error;

use uplift_core::UpliftError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config error: unknown key(s): {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("config error: `{key}` {detail}")]
    Range { key: String, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] UpliftError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            CliError::Config(_) | CliError::UnknownKeys(_) | CliError::Range { .. }
        )
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
