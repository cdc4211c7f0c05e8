use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration, detected before any computation.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] kslab_core::Error),

    #[error("cannot write `{path}`: {source}")]
    Write { path: String, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for numeric failures at run time, 2 for everything the user can fix in the config.
    pub fn exit_code(&self) -> i32 {
        use kslab_core::Error as E;
        match self {
            CliError::Core(E::NotConverged { .. } | E::DegenerateDenominator { .. }) => 1,
            CliError::Write { .. } => 1,
            _ => 2,
        }
    }
}
