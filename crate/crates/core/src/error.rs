use thiserror::Error;

/// Errors raised by graph construction, parameter validation and the
/// numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// Node ids in `components` are 1-based, matching the edge-list format.
    #[error("graph is disconnected: {} components {:?}", components.len(), components)]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
