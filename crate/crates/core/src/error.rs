use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bandit instance: {0}")]
    InvalidInstance(String),

    #[error("arm index {index} out of range for {k} arms")]
    ArmOutOfRange { index: usize, k: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no decision after {0} pulls")]
    Budget(u64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by user input rather than by the computation itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidInstance(_))
    }
}
