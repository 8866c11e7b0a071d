use thiserror::Error;

/// Errors raised by the OTFS building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size mismatch in {what}: expected {expected}, got {got}")]
    Size {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("channel matrix is rank deficient")]
    Rank,
    #[error("all branch gains are zero")]
    DegenerateCombine,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Size {
            what,
            expected,
            got,
        })
    }
}
