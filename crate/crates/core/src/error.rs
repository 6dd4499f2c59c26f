use thiserror::Error;

/// Errors produced by the calibration library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate rotation: angle {angle:.9} rad is within the log-map singularity margin")]
    DegenerateRotation { angle: f64 },

    #[error("degenerate rotation at pair {index}: angle {angle:.9} rad")]
    DegeneratePair { index: usize, angle: f64 },

    #[error("input outside the convergence domain: {0}")]
    OutOfDomain(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("every pair was rejected by the correspondence filter")]
    EmptyAfterFilter,

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("near-singular covariance (trace {trace:.3e})")]
    NearSingularCovariance { trace: f64 },

    #[error("degenerate variance in component {component}")]
    DegenerateVariance { component: usize },

    #[error("invalid selection range {lo}..={hi} for {n} pairs")]
    InvalidRange { lo: usize, hi: usize, n: usize },

    #[error("rank-deficient motion: {0}")]
    RankDeficientMotion(String),

    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),

    #[error("format error in record {record}: {message}")]
    Format { record: usize, message: String },

    #[error("validation error in record {record}: {message}")]
    Validation { record: usize, message: String },

    #[error("too many degenerate pairs: {skipped} of {total} skipped")]
    TooManySkipped { skipped: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::RankDeficientMotion(_)
                | Error::NearSingularCovariance { .. }
                | Error::DegenerateVariance { .. }
                | Error::TooManySkipped { .. }
                | Error::DegenerateRotation { .. }
                | Error::DegeneratePair { .. }
                | Error::EmptyAfterFilter
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
