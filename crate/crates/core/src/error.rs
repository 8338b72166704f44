use thiserror::Error;

/// Errors produced anywhere in the fitting and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs have inconsistent lengths or shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A z-score was requested for a field with zero spread.
    #[error("degenerate field: sample standard deviation is zero")]
    DegenerateField,

    /// Cholesky factorization failed even after the largest diagonal jitter.
    #[error("factorization failed for {what} (n = {n}) after jitter up to {max_jitter:e}")]
    Factorization {
        what: &'static str,
        n: usize,
        max_jitter: f64,
    },

    /// Fewer distinct locations than the requested basis dimension.
    #[error("rank deficient basis: {distinct} distinct locations, basis dimension {k}")]
    RankDeficient { distinct: usize, k: usize },

    /// The (penalized) normal equations are singular.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// Penalized IRLS did not meet its convergence criterion.
    #[error(
        "IRLS did not converge after {iterations} iterations (relative deviance change {change:e})"
    )]
    NonConvergence { iterations: usize, change: f64 },

    /// Binomial fitted probabilities collapsed onto 0 or 1.
    #[error("separation: {0} fitted probabilities pinned at 0 or 1")]
    Separation(usize),

    /// GCV is undefined because the fit uses every degree of freedom.
    #[error("degenerate GCV: edf {edf} >= n {n}")]
    DegenerateGcv { edf: f64, n: usize },

    /// The requested combination of method and data is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Configuration or command-line problem; the message names the offending key.
    #[error("usage: {0}")]
    Usage(String),

    /// File-system or serialization failure.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
