use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is malformed (non-finite coordinate, empty sample, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// An angle lies outside its declared range.
    #[error("angle {value} outside declared range [{lower}, {upper}){}", row_suffix(.row))]
    AngleRange {
        value: f64,
        lower: f64,
        upper: f64,
        row: Option<usize>,
    },

    /// A tuning parameter is out of its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested instance is outside what an algorithm supports.
    #[error("unsupported instance: {0}")]
    Unsupported(String),

    /// Not enough observations for the requested estimate.
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A bound function handed to the bound calculus is not monotone.
    #[error("invalid bound function: {0}")]
    InvalidBound(String),

    /// A variance or spread estimate collapsed to zero.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// A malformed row in a data file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A solver invariant was violated. Always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

fn row_suffix(row: &Option<usize>) -> String {
    match row {
        Some(r) => format!(" at line {r}"),
        None => String::new(),
    }
}

impl Error {
    /// True for errors caused by the caller's arguments rather than the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Unsupported(_))
    }

    /// True for errors that indicate a defect in this library.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
