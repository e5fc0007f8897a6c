//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An AR polynomial root lies inside or on the unit circle.
    #[error("model is not stationary: AR root with modulus {modulus:.9} is not outside the unit circle")]
    NonStationary { modulus: f64 },

    /// An MA polynomial root lies inside or on the unit circle.
    #[error("model is not invertible: MA root with modulus {modulus:.9} is not outside the unit circle")]
    NonInvertible { modulus: f64 },

    /// A constructor or operation argument is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A predictor was asked for errors before enough warm-up observations.
    #[error("insufficient history: need at least {needed} observations, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    /// A probability or similar argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical routine hit its iteration cap.
    #[error("failed to converge: {0}")]
    NonConvergence(String),

    /// Cholesky pivot collapsed; the matrix is not positive definite.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// A tensor-product quadrature was requested in too many dimensions.
    #[error("dimension {dim} exceeds the tensor quadrature limit of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    /// Rejection sampling failed to produce an accepted draw.
    #[error("rejection sampling budget of {attempts} attempts exhausted; the acceptance box is too small for the covariance")]
    RejectionBudgetExceeded { attempts: u64 },

    /// An observation or error fed to a chart was NaN or infinite.
    #[error("non-finite input value")]
    NonFiniteInput,

    /// A chart state that already signalled was updated without a reset.
    #[error("chart state is frozen after a signal; reset it before updating")]
    SignalledStateFrozen,

    /// A single simulated run exceeded the hard step cap.
    #[error("run length exceeded the cap of {cap} steps; the critical value is likely far too large")]
    RunLengthCapExceeded { cap: u64 },

    /// A search (candidate grid, refinement, …) exceeded its budget.
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Bisection could not bracket the target.
    #[error("no bracketing interval found: {0}")]
    NoBracket(String),

    /// An aggregation was asked to reduce zero records.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Two experiment records do not describe the same grid cell.
    #[error("mismatched experiment cells: {0}")]
    MismatchedCell(String),

    /// A chart was run without the tuning parameters it needs.
    #[error("chart is not calibrated: {0}")]
    Uncalibrated(String),

    /// A persisted file does not parse as the expected schema.
    #[error("malformed record: {0}")]
    Malformed(String),

    /// Underlying I/O failure while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure is a compute/search budget problem (as opposed to
    /// invalid input). Callers that map errors to process exit codes use this
    /// to separate "fix your configuration" from "raise the budget".
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::RejectionBudgetExceeded { .. }
                | Error::BudgetExceeded(_)
                | Error::RunLengthCapExceeded { .. }
                | Error::NoBracket(_)
                | Error::NonConvergence(_)
        )
    }
}
