//! Error taxonomy shared by every module in the crate.
//!
//! The split mirrors how callers need to react: bad inputs (parameters,
//! arguments, data files) are recoverable user errors, while non-convergence
//! and internal cross-check failures indicate the requested computation cannot
//! be trusted and should abort the pipeline.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters violate their invariants (e.g. `mu >= lambda`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the operation's domain (e.g. pgf argument
    /// outside `[0, 1]`, tolerance outside its admissible range).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative routine hit its hard cap before reaching its target.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// Two independent routes to the same quantity disagreed beyond the
    /// documented cross-validation tolerance.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// Moment-style estimation requires a non-empty zero class.
    #[error("zero class is empty: the repeated-moment estimator needs at least one zero observation")]
    ZeroClass,

    /// Every observation is zero; no offspring signal to estimate from.
    #[error("degenerate sample: all observations are zero")]
    DegenerateSample,

    /// A frequency class has probability that underflows to zero at the
    /// evaluation point, so a score contribution cannot be formed.
    #[error("class {class} has zero probability at the evaluation point; score is undefined there")]
    UnderflowingClass { class: u32 },

    /// Observation/frequency input data could not be parsed or is empty.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-facing category name (used by the CLI for exit codes
    /// and by tests; keep in sync with the README's exit-code table).
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Domain(_) => "domain",
            Error::NonConvergence(_) => "non-convergence",
            Error::InternalConsistency(_) => "internal-consistency",
            Error::ZeroClass => "zero-class",
            Error::DegenerateSample => "degenerate-sample",
            Error::UnderflowingClass { .. } => "underflowing-class",
            Error::InvalidInput(_) => "invalid-input",
        }
    }
}
