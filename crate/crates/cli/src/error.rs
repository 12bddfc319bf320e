use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or unusable input.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] hyperchange::Error),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 0 is success; 2 covers configuration and input problems; 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(hyperchange::Error::NonFinite { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
