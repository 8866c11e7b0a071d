use thiserror::Error;

/// Harness errors. The `Display` form is a single line suitable for
/// machine parsing: `<kind>: <detail>`.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: line {line}: key `{key}`: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("config: key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("core: {0}")]
    Core(#[from] otfs_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        SimError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
