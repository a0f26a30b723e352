//! Special functions and SPD linear algebra shared by the inference engines.

mod linalg;
mod special;

use thiserror::Error;

pub use linalg::{
    chol, rank1_inv_update, rank1_logdet_update, row_quadratic_forms, spd_logdet, spd_solve,
    symmetrize, weighted_gram, CholeskyFactor,
};
pub use special::{bound_offset, digamma, lambda_xi, log_gamma, log_sigmoid, sigmoid};

pub(crate) use special::LN_2PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("{func} is undefined at {x}")]
    Domain { func: &'static str, x: f64 },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("expected a non-empty square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFinite,
}
