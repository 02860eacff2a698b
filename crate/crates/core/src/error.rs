//! Library error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its domain (non-positive volatility, negative
    /// time, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested evaluation method does not cover this model/exponent
    /// combination.
    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    /// The requested moment is infinite for the model.
    #[error("divergent moment: {0}")]
    Divergent(String),

    /// The moment series did not converge within the term cap.
    #[error("series did not converge within {max_terms} terms (x = {x})")]
    SeriesNoConvergence { max_terms: usize, x: f64 },

    /// Model calibration failed on the supplied data.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A root/budget solver failed to bracket or converge.
    #[error("solver error: {0}")]
    Solver(String),

    /// Too few samples or paths for the requested diagnostic.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// Input data violates a structural requirement (ordering, positivity,
    /// length).
    #[error("data error: {0}")]
    Data(String),

    /// A file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A strategy specification is invalid or produced an out-of-bounds
    /// weight.
    #[error("strategy error: {0}")]
    Strategy(String),

    /// Requested dates fall outside the loaded series.
    #[error("date range error: {0}")]
    Range(String),

    /// A numerical derivative or grid evaluation produced a non-finite
    /// value.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
