use thiserror::Error;

/// Errors raised while building model values, catalog entries and programs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{kind} has no cycle count for width {width} bits")]
    UnsupportedWidth { kind: String, width: u32 },

    #[error("{0} has no canonical NOR netlist")]
    Unsupported(String),

    #[error("program needs {needed} columns but the array has {available}")]
    ColumnOverflow { needed: usize, available: usize },

    #[error("program needs {needed} rows but the array has {available}")]
    RowOverflow { needed: usize, available: usize },

    #[error("invalid program at instruction {index}: {reason}")]
    InvalidProgram { index: usize, reason: String },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
