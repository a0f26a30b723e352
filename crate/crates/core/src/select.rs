//! Polynomial feature maps and bound-based model selection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataio::{Dataset, LabelDataset};
use crate::fit::{FitError, FitOptions};
use crate::linear::{fit_linear, LinearPosterior, LinearPriors};
use crate::logit::{fit_logit, LogitPosterior, LogitPriors};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("no candidate orders given")]
    NoCandidates,
    #[error("polynomial order must be at least 1")]
    ZeroOrder,
    #[error("candidate {index} (order {order}): {source}")]
    Candidate {
        index: usize,
        order: usize,
        #[source]
        source: FitError,
    },
    #[error("candidate {index} (order {order}) has a non-finite bound")]
    NonFinite { index: usize, order: usize },
}

impl SelectError {
    pub fn is_numerical(&self) -> bool {
        match self {
            SelectError::Candidate { source, .. } => source.is_numerical(),
            SelectError::NonFinite { .. } => true,
            _ => false,
        }
    }
}

/// Column j holds x^j for j = 0..k−1, with 0⁰ = 1.
pub fn polynomial_design(x: &DVector<f64>, k: usize) -> Result<DMatrix<f64>, SelectError> {
    if k == 0 {
        return Err(SelectError::ZeroOrder);
    }
    Ok(DMatrix::from_fn(x.len(), k, |r, j| x[r].powi(j as i32)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Linear(LinearPriors),
    Logit(LogitPriors),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidatePosterior {
    Linear(LinearPosterior),
    Logit(LogitPosterior),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub index: usize,
    /// Number of polynomial columns.
    pub order: usize,
    pub bound: f64,
    pub posterior: CandidatePosterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Index into `candidates` of the highest bound; ties go to the lower index.
    pub best: usize,
    pub candidates: Vec<CandidateResult>,
}

impl Selection {
    pub fn winner(&self) -> &CandidateResult {
        &self.candidates[self.best]
    }
}

fn fit_candidate(
    x: &DVector<f64>,
    y: &DVector<f64>,
    order: usize,
    task: &Task,
    opts: &FitOptions,
) -> Result<(f64, CandidatePosterior), FitError> {
    let design =
        polynomial_design(x, order).map_err(|e| FitError::Invalid(e.to_string()))?;
    let data = Dataset::from_xy(design, y.clone())?;
    Ok(match task {
        Task::Linear(priors) => {
            let post = fit_linear(&data, priors, opts)?;
            (post.elbo, CandidatePosterior::Linear(post))
        }
        Task::Logit(priors) => {
            let post = fit_logit(&LabelDataset::try_from(data)?, priors, opts)?;
            (post.bound, CandidatePosterior::Logit(post))
        }
    })
}

/// Fits one polynomial model per entry of `orders` from a cold start and picks
/// the one with the highest bound on the log evidence.
pub fn select_model(
    x: &DVector<f64>,
    y: &DVector<f64>,
    orders: &[usize],
    task: &Task,
    opts: &FitOptions,
) -> Result<Selection, SelectError> {
    if orders.is_empty() {
        return Err(SelectError::NoCandidates);
    }
    if orders.contains(&0) {
        return Err(SelectError::ZeroOrder);
    }
    let fits: Vec<_> = orders
        .par_iter()
        .map(|&order| fit_candidate(x, y, order, task, opts))
        .collect();
    let mut candidates = Vec::with_capacity(orders.len());
    for (index, (fit, &order)) in fits.into_iter().zip(orders).enumerate() {
        let (bound, posterior) =
            fit.map_err(|source| SelectError::Candidate { index, order, source })?;
        if !bound.is_finite() {
            return Err(SelectError::NonFinite { index, order });
        }
        candidates.push(CandidateResult {
            index,
            order,
            bound,
            posterior,
        });
    }
    let best = argmax_first(candidates.iter().map(|c| c.bound));
    Ok(Selection { best, candidates })
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
