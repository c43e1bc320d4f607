use thiserror::Error;

use crate::dressed::StateLabel;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameter `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

impl ParamError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self { field, reason: reason.into() }
    }
}

/// Failures of the transmon and dressed-state solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("eigensolver failed: {0}")]
    Convergence(String),
    #[error("charge cutoff too small: level {level} moved by {shift:e} GHz when n_cut was doubled")]
    Cutoff { level: usize, shift: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state {0} is missing or ambiguously labelled")]
    MissingLabel(StateLabel),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("spectrum at current index {index} has fewer than 3 frequency samples")]
    EmptyColumn { index: usize },
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("insufficient data: {have} usable points, at least {need} required")]
    InsufficientData { have: usize, need: usize },
    #[error("no convergence after {iterations} iterations (step norm {step_norm:e}): {reason}")]
    NoConvergence { iterations: usize, step_norm: f64, reason: String },
    #[error("decay trace does not decay (time constant pinned at upper bound {t1_upper} µs)")]
    NonDecaying { t1_upper: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Data(#[from] DataError),
}
