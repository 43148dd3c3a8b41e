use thiserror::Error;

/// Errors raised by the model, the analytic evaluators and the numerical oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A steady-state quantity was requested at or above threshold.
    #[error("stability error: {quantity} requires operation below threshold (lambda_minus = {lambda_minus:e})")]
    Stability {
        quantity: &'static str,
        lambda_minus: f64,
    },

    /// A closed form produced a value outside its physical range.
    #[error("formula validity error: {formula} evaluated to {value:e}")]
    FormulaValidity { formula: &'static str, value: f64 },

    /// The Fock-space truncation is too small for the evolved state.
    #[error("truncation error: population {tail:e} at level {n_max} exceeds {tolerance:e}; use n_max >= {required}")]
    Truncation {
        n_max: usize,
        tail: f64,
        tolerance: f64,
        required: usize,
    },

    /// A numerical procedure failed to converge or met unusable input.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
