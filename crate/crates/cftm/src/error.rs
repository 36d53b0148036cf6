//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CftmError>;

#[derive(Debug, Error)]
pub enum CftmError {
    /// Input violates a documented precondition or type invariant.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed (factorization, divergence, non-finite values).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed input data; carries the 1-based line number when known.
    #[error("parse error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    /// A config or params file failed schema validation.
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CftmError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CftmError::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CftmError::Numerical(msg.into())
    }

    pub fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        CftmError::Parse { line, message: msg.into() }
    }

    pub fn schema(field: impl Into<String>, msg: impl Into<String>) -> Self {
        CftmError::Schema { field: field.into(), message: msg.into() }
    }

    /// Short machine-parsable code, used by the CLI error format.
    pub fn code(&self) -> &'static str {
        match self {
            CftmError::Domain(_) => "E_DOMAIN",
            CftmError::Numerical(_) => "E_NUMERIC",
            CftmError::Parse { .. } => "E_PARSE",
            CftmError::Schema { .. } => "E_SCHEMA",
            CftmError::Io(_) => "E_IO",
        }
    }
}
