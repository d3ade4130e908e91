use alloc::string::String;
use core::fmt;

/// Errors produced by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A coordinate fell outside the divergence's domain.
    DomainViolation {
        dim: usize,
        value: f64,
        /// Record identifier when the offending vector is a stored point.
        record: Option<u64>,
        reason: &'static str,
    },
    /// Two vectors that must agree in length do not.
    LengthMismatch { expected: usize, actual: usize },
    /// A value outside the range of the generator's derivative.
    GradientRangeViolation { value: f64, reason: &'static str },
    /// Invalid divergence configuration (bad weights, wrong length...).
    InvalidSpec(String),
    /// A partition layout failed validation.
    InvalidLayout(String),
    /// `k` outside `1..=n`.
    InvalidK { k: usize, n: usize },
    /// Partition count outside `1..=d`.
    InvalidPartitionCount { m: usize, d: usize },
    /// An operation that needs data received none.
    EmptyInput(&'static str),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::DomainViolation { dim, value, record, reason } => {
                write!(f, "domain violation at dimension {dim} (value {value}): {reason}")?;
                if let Some(id) = record {
                    write!(f, " [record {id}]")?;
                }
                Ok(())
            }
            CoreError::LengthMismatch { expected, actual } => {
                write!(f, "length mismatch: expected {expected}, got {actual}")
            }
            CoreError::GradientRangeViolation { value, reason } => {
                write!(f, "value {value} outside the derivative's range: {reason}")
            }
            CoreError::InvalidSpec(msg) => write!(f, "invalid divergence spec: {msg}"),
            CoreError::InvalidLayout(msg) => write!(f, "invalid partition layout: {msg}"),
            CoreError::InvalidK { k, n } => write!(f, "k={k} outside 1..={n}"),
            CoreError::InvalidPartitionCount { m, d } => {
                write!(f, "partition count {m} outside 1..={d}")
            }
            CoreError::EmptyInput(what) => write!(f, "empty input: {what}"),
        }
    }
}

impl core::error::Error for CoreError {}
