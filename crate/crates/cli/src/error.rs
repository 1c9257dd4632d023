use obstacle_core::Error as CoreError;
use thiserror::Error;

/// CLI failures, each mapped to a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    /// Core precondition failure, tagged with the config block that caused it.
    #[error("{block}: {source}")]
    Invalid {
        block: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("solver: {0}")]
    NotConverged(String),

    #[error("{0} asserted suite(s) failed")]
    SuitesFailed(usize),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid { .. } => 2,
            CliError::NotConverged(_) => 3,
            CliError::SuitesFailed(_) => 4,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }

    /// Attributes a core error to a config block; nonconvergence keeps its own status.
    pub fn from_core(block: &'static str, e: CoreError) -> Self {
        match e {
            CoreError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            CoreError::Io(_) | CoreError::Json(_) => CliError::Core(e),
            other => CliError::Invalid { block, source: other },
        }
    }
}

pub fn io_error(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}
