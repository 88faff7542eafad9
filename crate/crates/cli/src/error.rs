use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}field `{field}`: {msg}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: String,
        msg: String,
    },
    #[error(transparent)]
    Core(#[from] noonsim::Error),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 0 success, 1 verification or numerical failure, 2 usage/config, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Config { .. } => 2,
            Self::Core(noonsim::Error::Numeric { .. } | noonsim::Error::SingularityProximity { .. }) => 1,
            Self::Core(_) => 2,
            Self::Io { .. } => 3,
            Self::Verification(_) => 1,
        }
    }

    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            msg: err.to_string(),
        }
    }

    pub(crate) fn field(field: &str, msg: impl Into<String>) -> Self {
        Self::Config {
            line: None,
            field: field.to_string(),
            msg: msg.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
