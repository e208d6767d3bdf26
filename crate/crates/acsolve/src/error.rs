use std::path::PathBuf;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help or version output requested, or a clap parse error.
    #[error("{0}")]
    Clap(#[from] clap::Error),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical blowup: {0}")]
    Blowup(String),

    #[error(transparent)]
    Solver(acsolve_core::Error),
}

impl CliError {
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const BLOWUP: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => Self::USAGE,
            CliError::Io { .. } => Self::IO,
            CliError::Blowup(_) => Self::BLOWUP,
            CliError::Solver(acsolve_core::Error::InvalidConfig(_)) => Self::USAGE,
            CliError::Solver(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<acsolve_core::Error> for CliError {
    fn from(e: acsolve_core::Error) -> Self {
        use acsolve_core::Error as E;
        match e {
            E::Blowup { .. } | E::StudyBlowup { .. } => CliError::Blowup(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}
