//! Options, errors and small types shared by the linear and logistic fits.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::DataError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid {0}")]
    Invalid(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("numerical failure: {0}")]
    Numerics(#[from] NumericsError),
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    Dimension { expected: usize, found: usize },
}

impl FitError {
    /// True when the failure is numerical rather than a problem with the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, FitError::Numerics(_))
    }
}

/// Stopping rule for the coordinate-ascent loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop once |L_t − L_{t−1}| < rel_tol·|L_t| (1e-5 is a 0.001% change).
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-5,
            max_iter: 500,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(FitError::Invalid(format!(
                "rel_tol {} (must lie in (0, 1))",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(FitError::Invalid("max_iter 0 (must be >= 1)".into()));
        }
        Ok(())
    }

    pub(crate) fn converged(&self, prev: f64, cur: f64) -> bool {
        (cur - prev).abs() < self.rel_tol * cur.abs()
    }
}

/// A prior precision that is either shared by all coefficients or set per coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Precision {
    Shared(f64),
    PerDim(DVector<f64>),
}

impl Precision {
    /// The D diagonal entries this precision contributes.
    pub fn diagonal(&self, d: usize) -> DVector<f64> {
        match self {
            Precision::Shared(a) => DVector::from_element(d, *a),
            Precision::PerDim(v) => v.clone(),
        }
    }

    pub fn as_shared(&self) -> Option<f64> {
        match self {
            Precision::Shared(a) => Some(*a),
            Precision::PerDim(_) => None,
        }
    }

    pub fn as_per_dim(&self) -> Option<&DVector<f64>> {
        match self {
            Precision::Shared(_) => None,
            Precision::PerDim(v) => Some(v),
        }
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), FitError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(FitError::Invalid(format!("{name} = {v} (must be positive and finite)")))
    }
}
