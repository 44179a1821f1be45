use thiserror::Error;

/// Errors produced by the matrix routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square with positive dimension, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("entry ({row}, {col}) = {value} violates the Metzler sign condition")]
    NotMetzler { row: usize, col: usize, value: f64 },

    #[error("entry ({row}, {col}) = {value} is negative")]
    NotNonNegative { row: usize, col: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{context}: no convergence after {iterations} iterations (residual {residual:e})")]
    IterationLimit {
        context: &'static str,
        iterations: usize,
        residual: f64,
        /// Best iterate at the moment the budget ran out.
        best: Vec<f64>,
    },

    #[error("greedy method exceeded {iterations} iterations, suspected cycling")]
    CycleSuspected { iterations: usize, trace: Vec<f64> },

    #[error("{context}: budget of {budget} rounds exhausted (best value {best_value:e})")]
    BudgetExhausted {
        context: &'static str,
        budget: usize,
        best_value: f64,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// True for errors that mean an iteration or retry budget ran out.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::IterationLimit { .. } | Error::CycleSuspected { .. } | Error::BudgetExhausted { .. }
        )
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
