use std::path::PathBuf;

use fanet_sim::SimError;
use fsfl_ids::IdsError;

/// Failures grouped by what the user has to fix. Each category has its own
/// exit code and a stable name printed as `error[<name>]`.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing input: {0}")]
    Missing(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ids(#[from] IdsError),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Missing(_) => "input",
            CliError::Sim(SimError::InvalidConfig(_)) => "config",
            CliError::Sim(_) => "simulation",
            CliError::Ids(IdsError::InvalidPlan(_)) => "config",
            CliError::Ids(_) => "training",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "input" => 4,
            "simulation" => 5,
            _ => 6,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
