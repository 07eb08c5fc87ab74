use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing artifact `{0}`; run the earlier stages first")]
    MissingArtifact(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: macroprice::Error,
    },
}

impl CliError {
    /// 2 for invalid input, 3 for numerical or estimation failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io { .. } | CliError::MissingArtifact(_) => 4,
            CliError::Stage { source, .. } if source.is_io() => 4,
            CliError::Stage { source, .. } if source.is_numerical() => 3,
            CliError::Stage { .. } => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
