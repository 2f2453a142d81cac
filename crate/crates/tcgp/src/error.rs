use std::path::{Path, PathBuf};

/// Failures of a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for bad or missing data (including
    /// filesystem errors), 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn json(path: &Path, e: serde_json::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<tcgp_core::Error> for CliError {
    fn from(e: tcgp_core::Error) -> Self {
        use tcgp_core::Error as E;
        match e {
            E::InvalidParam(_) | E::DenseLimit { .. } => CliError::Config(e.to_string()),
            E::ZeroVariance { .. } | E::Shape(_) | E::NonFinite(_) | E::RegionOverlap(_) => {
                CliError::Data(e.to_string())
            }
            E::Decomposition | E::NonIntegrable { .. } | E::EmptySupport => CliError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
