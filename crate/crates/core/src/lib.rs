//! Variational Bayesian linear and logistic regression.
//!
//! Coordinate-ascent inference for hierarchical linear regression (with a
//! normal-inverse-gamma prior and a Gamma hyper-prior on the coefficient
//! precision) and for logistic regression under a local exponential-quadratic
//! bound on the sigmoid. Both come with automatic relevance determination
//! variants, predictive densities and bound-based model selection.

pub mod cli;
pub mod dataio;
pub mod fit;
pub mod linear;
pub mod logit;
pub mod numerics;
pub mod select;

pub use dataio::{Dataset, LabelDataset};
pub use fit::{FitError, FitOptions, Precision};
pub use linear::{
    elbo_linear, fit_linear, fit_linear_ard, fit_linear_clamped, predict_linear,
    student_t_logpdf, LinearPosterior, LinearPriors, LinearVariant, StudentTPrediction,
};
pub use logit::{
    fit_logit, fit_logit_ard, fit_logit_iter, logit_bound, logit_prior_fixed, predict_logit,
    predict_logit_state, update_xi, LogitPosterior, LogitPredictState, LogitPriors, LogitVariant,
};
pub use select::{polynomial_design, select_model, CandidateResult, Selection, Task};
