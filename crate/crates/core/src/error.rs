use std::path::PathBuf;

/// Errors raised by the numerical routines.
///
/// The variants split into two groups: precondition failures, which are the
/// caller's fault (bad ranges, malformed tables, infeasible parameters), and
/// numeric failures, which mean a solver or quadrature could not converge.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("tabulation error: {0}")]
    Tabulation(String),

    #[error("{what} fails: need n >= {required_n}, have n = {n}")]
    Infeasible {
        what: String,
        required_n: usize,
        n: usize,
    },

    #[error("N = -ln F is not convex: {0}")]
    NonConvex(String),

    #[error("order violation at index {index}: {message}")]
    Order { index: usize, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("quadrature did not converge (achieved error estimate {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("modular sum is unbounded: {0}")]
    Unbounded(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by invalid inputs rather than solver breakdown.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            Error::Quadrature { .. } | Error::Unbounded(_) | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
