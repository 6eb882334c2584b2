use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed group, chain or domain data (bad table, mismatched rank, ...).
    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("level {level} outside configured range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    /// A query needs more levels than the configured chain prefix provides.
    #[error("depth exhausted: {0}")]
    DepthExhausted(String),

    /// A checked mathematical identity failed. Always a bug or a bad deck.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A certificate could not be re-checked (witness outside the oracle window).
    #[error("verification error: {0}")]
    Verification(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
