use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Core(#[from] minlgan::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what} in {path}: {detail}")]
    Parse { path: PathBuf, what: &'static str, detail: String },
    #[error("run {config_hash} failed in {stage}: {source}")]
    RunFailed {
        config_hash: String,
        stage: String,
        #[source]
        source: minlgan::Error,
    },
}

impl CliError {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<Path>, what: &'static str, detail: impl ToString) -> Self {
        CliError::Parse {
            path: path.as_ref().to_path_buf(),
            what,
            detail: detail.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
