use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mode index {0} (indices start at 1)")]
    InvalidIndex(i64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid of {grid} points cannot resolve {modes} modes (need at least {required})")]
    Resolution {
        modes: usize,
        grid: usize,
        required: usize,
    },

    #[error("invalid noise key: {0}")]
    InvalidKey(String),

    #[error("interval is not aligned to the fine noise grid: {0}")]
    Alignment(String),

    #[error("state blew up at step {step}: {reason}")]
    Blowup { step: usize, reason: String },

    #[error("path blew up in sample {sample} at resolution {resolution}, step {step}")]
    StudyBlowup {
        sample: u64,
        resolution: usize,
        step: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
