//! JSON persistence of fitted posteriors.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::fit::{FitOptions, Precision};
use crate::linear::{LinearPosterior, LinearPriors, LinearVariant};
use crate::logit::{LogitPosterior, LogitPriors, LogitVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    Linear,
    LinearArd,
    Logit,
    LogitArd,
    LogitIter,
}

impl ModelTag {
    pub fn is_linear(self) -> bool {
        matches!(self, ModelTag::Linear | ModelTag::LinearArd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl From<&Precision> for ScalarOrVec {
    fn from(p: &Precision) -> Self {
        match p {
            Precision::Shared(a) => ScalarOrVec::Scalar(*a),
            Precision::PerDim(v) => ScalarOrVec::Vector(v.iter().copied().collect()),
        }
    }
}

impl ScalarOrVec {
    fn to_precision(&self, d: usize, field: &str) -> Result<Precision, CliError> {
        match self {
            ScalarOrVec::Scalar(a) => Ok(Precision::Shared(*a)),
            ScalarOrVec::Vector(v) if v.len() == d => {
                Ok(Precision::PerDim(DVector::from_column_slice(v)))
            }
            ScalarOrVec::Vector(v) => Err(CliError::Data(format!(
                "posterior field {field} has {} entries, expected {d}",
                v.len()
            ))),
        }
    }
}

/// Prior and stopping-rule settings used for the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorEcho {
    pub a0: f64,
    pub b0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl PriorEcho {
    pub fn linear(p: &LinearPriors, opts: &FitOptions) -> Self {
        Self {
            a0: p.a0,
            b0: p.b0,
            c0: Some(p.c0),
            d0: Some(p.d0),
            rel_tol: opts.rel_tol,
            max_iter: opts.max_iter,
        }
    }

    pub fn logit(p: &LogitPriors, opts: &FitOptions) -> Self {
        Self {
            a0: p.a0,
            b0: p.b0,
            c0: None,
            d0: None,
            rel_tol: opts.rel_tol,
            max_iter: opts.max_iter,
        }
    }

    pub fn options(&self) -> FitOptions {
        FitOptions {
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDocument {
    pub model: ModelTag,
    pub w: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    #[serde(rename = "invV")]
    pub inv_v: Vec<Vec<f64>>,
    #[serde(rename = "logdetV")]
    pub logdet_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_n: Option<ScalarOrVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_n: Option<ScalarOrVec>,
    #[serde(rename = "E_alpha", default, skip_serializing_if = "Option::is_none")]
    pub e_alpha: Option<ScalarOrVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    pub elbo: f64,
    pub iterations: usize,
    pub converged: bool,
    pub priors: PriorEcho,
    pub feature_names: Vec<String>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], d: usize, field: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Data(format!("posterior field {field} is not {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
}

fn required<T>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Data(format!("posterior lacks field {field}")))
}

/// Fitted posterior of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Linear(LinearPosterior),
    Logit(LogitPosterior),
}

impl PosteriorDocument {
    pub fn from_linear(
        post: &LinearPosterior,
        priors: &LinearPriors,
        opts: &FitOptions,
        feature_names: &[String],
    ) -> Result<Self, CliError> {
        let model = match post.variant {
            LinearVariant::Shared => ModelTag::Linear,
            LinearVariant::Ard => ModelTag::LinearArd,
            LinearVariant::Clamped(_) => {
                return Err(CliError::Usage("clamped fits cannot be stored".into()))
            }
        };
        Ok(Self {
            model,
            w: post.mean.iter().copied().collect(),
            v: rows(&post.cov),
            inv_v: rows(&post.inv_cov),
            logdet_v: post.logdet_cov,
            a_n: Some(post.a_n),
            b_n: Some(ScalarOrVec::Scalar(post.b_n)),
            c_n: post.c_n,
            d_n: post.d_n.as_ref().map(ScalarOrVec::from),
            e_alpha: Some(ScalarOrVec::from(&post.e_alpha)),
            xi: None,
            elbo: post.elbo,
            iterations: post.iterations,
            converged: post.converged,
            priors: PriorEcho::linear(priors, opts),
            feature_names: feature_names.to_vec(),
        })
    }

    pub fn from_logit(
        post: &LogitPosterior,
        priors: &LogitPriors,
        opts: &FitOptions,
        feature_names: &[String],
    ) -> Self {
        let model = match post.variant {
            LogitVariant::Shared => ModelTag::Logit,
            LogitVariant::Ard => ModelTag::LogitArd,
            LogitVariant::Incremental => ModelTag::LogitIter,
        };
        Self {
            model,
            w: post.mean.iter().copied().collect(),
            v: rows(&post.cov),
            inv_v: rows(&post.inv_cov),
            logdet_v: post.logdet_cov,
            a_n: post.a_n,
            b_n: post.b_n.as_ref().map(ScalarOrVec::from),
            c_n: None,
            d_n: None,
            e_alpha: post.e_alpha.as_ref().map(ScalarOrVec::from),
            xi: Some(post.xi.iter().copied().collect()),
            elbo: post.bound,
            iterations: post.iterations,
            converged: post.converged,
            priors: PriorEcho::logit(priors, opts),
            feature_names: feature_names.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn to_posterior(&self) -> Result<Posterior, CliError> {
        let d = self.dim();
        if d == 0 {
            return Err(CliError::Data("posterior has no coefficients".into()));
        }
        if !self.feature_names.is_empty() && self.feature_names.len() != d {
            return Err(CliError::Data(format!(
                "posterior lists {} feature names for {d} coefficients",
                self.feature_names.len()
            )));
        }
        let mean = DVector::from_column_slice(&self.w);
        let cov = matrix(&self.v, d, "V")?;
        let inv_cov = matrix(&self.inv_v, d, "invV")?;
        let precision = |f: &Option<ScalarOrVec>, name: &str| {
            f.as_ref().map(|s| s.to_precision(d, name)).transpose()
        };
        if self.model.is_linear() {
            let b_n = match required(self.b_n.clone(), "b_n")? {
                ScalarOrVec::Scalar(b) => b,
                ScalarOrVec::Vector(_) => {
                    return Err(CliError::Data("linear b_n must be a scalar".into()))
                }
            };
            Ok(Posterior::Linear(LinearPosterior {
                variant: if self.model == ModelTag::Linear {
                    LinearVariant::Shared
                } else {
                    LinearVariant::Ard
                },
                mean,
                cov,
                inv_cov,
                logdet_cov: self.logdet_v,
                a_n: required(self.a_n, "a_n")?,
                b_n,
                c_n: self.c_n,
                d_n: precision(&self.d_n, "d_n")?,
                e_alpha: required(precision(&self.e_alpha, "E_alpha")?, "E_alpha")?,
                elbo: self.elbo,
                elbo_history: Vec::new(),
                iterations: self.iterations,
                converged: self.converged,
            }))
        } else {
            Ok(Posterior::Logit(LogitPosterior {
                variant: match self.model {
                    ModelTag::Logit => LogitVariant::Shared,
                    ModelTag::LogitArd => LogitVariant::Ard,
                    _ => LogitVariant::Incremental,
                },
                mean,
                cov,
                inv_cov,
                logdet_cov: self.logdet_v,
                a_n: self.a_n,
                b_n: precision(&self.b_n, "b_n")?,
                e_alpha: precision(&self.e_alpha, "E_alpha")?,
                xi: DVector::from_vec(self.xi.clone().unwrap_or_default()),
                bound: self.elbo,
                bound_history: Vec::new(),
                iterations: self.iterations,
                converged: self.converged,
            }))
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Numerical(format!("cannot serialize posterior: {e}")))?;
        body.push('\n');
        fs::write(path, body)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let body = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&body)
            .map_err(|e| CliError::Data(format!("{}: malformed posterior: {e}", path.display())))
    }
}
