//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Failures reported by the numerical routines and the file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A shot reached the end of its grid without crossing, rebounding or decaying.
    #[error("shot with u0 = {u0} could not be classified before r = {r_max}")]
    AmbiguousClassification { u0: f64, r_max: f64 },

    /// No crossing shot was found while expanding the upper bracket.
    #[error("no crossing shot found for u0 up to {upper}")]
    NoBracket { upper: f64 },

    /// An adaptive quadrature or a fixed rule needed more evaluations than allowed.
    #[error("quadrature budget exceeded: {needed} evaluations requested, budget {budget}")]
    QuadratureBudgetExceeded { needed: u64, budget: u64 },

    /// The fast interaction path was requested without a fitted prefactor.
    #[error("interaction fit unavailable for separation {separation}")]
    FitUnavailable { separation: f64 },

    /// Neighbouring bumps are closer than the configured floor.
    #[error("bump separation {gap} is below the floor {floor}")]
    GapTooSmall { gap: f64, floor: f64 },

    /// The number of bumps is outside the supported range.
    #[error("invalid bump count {k}")]
    InvalidCount { k: usize },

    /// A bump index outside `1..=k`.
    #[error("bump index {index} out of range for k = {k}")]
    IndexOutOfRange { index: usize, k: usize },

    /// The window half-width does not satisfy `0 < beta < m / pi`.
    #[error("window half-width beta = {beta} must lie in (0, {limit})")]
    InvalidBeta { beta: f64, limit: f64 },

    /// The Gram matrix of a basis is numerically singular.
    #[error("basis Gram matrix is degenerate (condition number {condition:e})")]
    DegenerateBasis { condition: f64 },

    /// The fixed-point iteration failed to contract.
    #[error("fixed-point iteration stopped contracting after {iterations} iterations (last ratio {ratio})")]
    NotContracting { iterations: usize, ratio: f64 },

    /// The spectral split precondition of the fixed-point solve does not hold.
    #[error("spectral split violated: {reason}")]
    SplitViolated { reason: String },

    /// A parameter is outside its admissible domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Configuration validation failures, one message per offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),

    /// A data file has an unexpected header, version or row.
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// A failure of an earlier step, shared by several dependent checks.
    #[error("{0}")]
    Upstream(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Copy of a shared failure for reporting in dependent steps.
    pub fn upstream(&self) -> Self {
        match self {
            Error::QuadratureBudgetExceeded { needed, budget } => Error::QuadratureBudgetExceeded {
                needed: *needed,
                budget: *budget,
            },
            other => Error::Upstream(other.to_string()),
        }
    }

    /// True for failures caused by an exhausted evaluation budget.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::QuadratureBudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
