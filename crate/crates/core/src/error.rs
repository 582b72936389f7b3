use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes of consecutive layers, or of the last layer and the data, do not chain.
    #[error("dimension mismatch at layer {layer}: expected {expected}, found {found}")]
    Dimension {
        layer: usize,
        expected: String,
        found: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn dim(layer: usize, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            layer,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
