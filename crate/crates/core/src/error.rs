use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid framework: {0}")]
    InvalidQbaf(String),

    /// The attack/support graph is not acyclic; carries one edge lying on a cycle.
    #[error("cycle detected through edge {from} -> {to}")]
    Cycle { from: String, to: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("load error at row {row}, column `{column}`: {message}")]
    Load {
        row: usize,
        column: String,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
