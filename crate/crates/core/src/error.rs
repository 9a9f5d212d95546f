use thiserror::Error;

use crate::multiindex::MultiIndex;

/// Errors raised by the samplers, solvers and models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite log-likelihood {value} at resolution {alpha}")]
    NonFiniteLikelihood { alpha: MultiIndex, value: f64 },

    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("all resampling weights are zero (degenerate likelihood)")]
    DegenerateWeights,

    #[error("self-normalized weights of corner {corner} sum to zero at index {alpha}")]
    DegenerateCoupling { alpha: MultiIndex, corner: MultiIndex },

    #[error("no value supplied for corner {0}")]
    MissingCorner(MultiIndex),

    #[error("exp overflow in quadrature (field maximum {max_field})")]
    QuadratureOverflow { max_field: f64 },

    #[error("empty index set")]
    EmptyIndexSet,

    #[error("invalid tempering schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("estimation failed at index {alpha}: {source}")]
    AtIndex {
        alpha: MultiIndex,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attaches the failing multi-index to an error.
    pub fn at(self, alpha: &MultiIndex) -> Error {
        match self {
            e @ Error::AtIndex { .. } => e,
            e => Error::AtIndex {
                alpha: alpha.clone(),
                source: Box::new(e),
            },
        }
    }

    /// The multi-index reported by the innermost `AtIndex` wrapper, if any.
    pub fn failing_index(&self) -> Option<&MultiIndex> {
        match self {
            Error::AtIndex { alpha, .. } => Some(alpha),
            Error::NonFiniteLikelihood { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// True for errors that come from numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AtIndex { source, .. } => source.is_numerical(),
            Error::NonFiniteLikelihood { .. }
            | Error::SolverNotConverged { .. }
            | Error::DegenerateWeights
            | Error::DegenerateCoupling { .. }
            | Error::QuadratureOverflow { .. } => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
