use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A mathematical operation is undefined at the given input.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("parse error at line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// Reason attached to an [`Error::Parse`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Header { expected: String, found: String },
    FieldCount { expected: usize, found: usize },
    NonNumeric { field: &'static str, value: String },
    OutOfRange { field: &'static str, value: f64 },
    DuplicateStep { device_id: u64, time_step: u64 },
    MissingStep { device_id: u64, time_step: u64 },
    Malformed(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Header { expected, found } => {
                write!(f, "bad header: expected `{expected}`, found `{found}`")
            }
            ParseErrorKind::FieldCount { expected, found } => {
                write!(f, "expected {expected} fields, found {found}")
            }
            ParseErrorKind::NonNumeric { field, value } => {
                write!(f, "field `{field}` is not a number: `{value}`")
            }
            ParseErrorKind::OutOfRange { field, value } => {
                write!(f, "field `{field}` out of range: {value}")
            }
            ParseErrorKind::DuplicateStep { device_id, time_step } => {
                write!(f, "duplicate time step {time_step} for device {device_id}")
            }
            ParseErrorKind::MissingStep { device_id, time_step } => {
                write!(f, "device {device_id} is missing time step {time_step}")
            }
            ParseErrorKind::Malformed(msg) => f.write_str(msg),
        }
    }
}
