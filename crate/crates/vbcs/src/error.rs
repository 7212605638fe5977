//! Crate-wide error type.

use std::fmt;

/// Errors produced by graph construction, decoding, density evolution and the
/// experiment harness.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter combination is invalid (e.g. `n * d_v` not divisible by
    /// `d_c`, empty grids, zero trial counts).
    InvalidParameter(String),
    /// The edge-swap repair of the configuration model did not reach a simple
    /// graph within the attempt budget.
    GraphConstruction(String),
    /// Dimension mismatch between a graph and a signal or measurement vector.
    DimensionMismatch { expected: usize, got: usize },
    /// A density-evolution invariant (probability normalization, range or
    /// monotonicity) was violated during iteration.
    InvariantViolation(String),
    /// The bisection bracket does not contain a success/failure transition.
    NoTransition(String),
    /// Parsing a graph file failed.
    Parse(String),
    /// Underlying I/O failure, carried as text so the error stays `Clone`.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::GraphConstruction(msg) => write!(f, "graph construction failed: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvariantViolation(msg) => write!(f, "invariant violation: {msg}"),
            Error::NoTransition(msg) => write!(f, "no transition in interval: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
