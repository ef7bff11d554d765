use std::path::PathBuf;

use ma_lab_core::estimates::StageError;
use ma_lab_core::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("instance {instance}: solver failed: {source}")]
    Solver {
        instance: String,
        #[source]
        source: SolverError,
    },
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error("{count} inequality row(s) failed: {ids}")]
    Violation { count: usize, ids: String },
    #[error("schema mismatch: {found} in {} but {expected} elsewhere", path.display())]
    MixedSchema { expected: String, found: String, path: PathBuf },
    #[error("no manifests to summarize")]
    EmptyInput,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for solver failures, 4 for
    /// failed inequality rows and 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::MixedSchema { .. } | CliError::EmptyInput | CliError::Json { .. } => 2,
            CliError::Solver { .. } => 3,
            CliError::Violation { .. } => 4,
            CliError::Stage(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Json { path, source }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::EmptyInput.exit_code(), 2);
        let s = CliError::Solver { instance: "a".into(), source: SolverError::InfeasibleMass };
        assert_eq!(s.exit_code(), 3);
        assert_eq!(CliError::Violation { count: 1, ids: "levelsets".into() }.exit_code(), 4);
        assert_eq!(CliError::io("x")(std::io::Error::other("boom")).exit_code(), 1);
    }
}
