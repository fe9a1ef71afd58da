use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("model: {0}")]
    ModelLoad(String),
    #[error("{0}")]
    Runtime(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 when the model cannot be loaded.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::ModelLoad(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<qreward_core::pipeline::JsonlError> for CliError {
    fn from(e: qreward_core::pipeline::JsonlError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<qreward_core::fusion::FusionError> for CliError {
    fn from(e: qreward_core::fusion::FusionError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
