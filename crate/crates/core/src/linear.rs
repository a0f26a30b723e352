//! Variational Bayesian linear regression.
//!
//! The model is y_n ~ N(wᵀx_n, τ⁻¹) with the conjugate normal-inverse-gamma
//! prior w | τ, α ~ N(0, (τα)⁻¹ I), τ ~ Gam(a0, b0) and the hyper-prior
//! α ~ Gam(c0, d0). The ARD variant gives every coefficient its own α_i.
//!
//! The posterior factorizes as Q(w, τ) Q(α). Each outer iteration updates
//! Q(w, τ), then Q(α), then evaluates the bound, so the bound is exact at
//! every recorded step and never decreases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::fit::{check_positive, FitError, FitOptions, Precision};
use crate::numerics::{chol, log_gamma, row_quadratic_forms, weighted_gram, LN_2PI};

/// Gamma prior on the noise precision τ (a0, b0) and hyper-prior on α (c0, d0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPriors {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: f64,
}

impl Default for LinearPriors {
    fn default() -> Self {
        Self {
            a0: 1e-2,
            b0: 1e-4,
            c0: 1e-2,
            d0: 1e-4,
        }
    }
}

impl LinearPriors {
    pub fn validate(&self) -> Result<(), FitError> {
        check_positive("a0", self.a0)?;
        check_positive("b0", self.b0)?;
        check_positive("c0", self.c0)?;
        check_positive("d0", self.d0)
    }
}

/// How the prior precision α on the coefficients is treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearVariant {
    /// One α with a Gamma hyper-posterior.
    Shared,
    /// One α_i per coefficient (automatic relevance determination).
    Ard,
    /// α held at a fixed value; Q(w, τ) is then the exact conjugate posterior.
    Clamped(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPosterior {
    pub variant: LinearVariant,
    /// Posterior mean w_N.
    pub mean: DVector<f64>,
    /// Scaled covariance V_N; Cov(w | τ) = τ⁻¹ V_N.
    pub cov: DMatrix<f64>,
    /// V_N⁻¹.
    pub inv_cov: DMatrix<f64>,
    pub logdet_cov: f64,
    /// Shape and rate of the Gamma posterior on τ.
    pub a_n: f64,
    pub b_n: f64,
    /// Shape and rate(s) of the Gamma hyper-posterior on α; absent when clamped.
    pub c_n: Option<f64>,
    pub d_n: Option<Precision>,
    /// E[α] (shared) or E[α_i] (ARD).
    pub e_alpha: Precision,
    pub elbo: f64,
    /// The bound after every outer iteration.
    pub elbo_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// E[τ] = a_N / b_N.
    pub fn noise_precision(&self) -> f64 {
        self.a_n / self.b_n
    }
}

/// Location-scale Student-t: mean `mu`, precision `lambda`, `nu` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentTPrediction {
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
}

impl StudentTPrediction {
    /// ν / (λ(ν − 2)) for ν > 2.
    pub fn variance(&self) -> Option<f64> {
        (self.nu > 2.0).then(|| self.nu / (self.lambda * (self.nu - 2.0)))
    }

    pub fn sd(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }

    pub fn logpdf(&self, y: f64) -> f64 {
        student_t_logpdf(self, y)
    }
}

/// Log density of a location-scale Student-t.
pub fn student_t_logpdf(p: &StudentTPrediction, y: f64) -> f64 {
    let nu = p.nu;
    let half = 0.5 * (nu + 1.0);
    // arguments are positive for any valid prediction
    let norm = log_gamma(half).unwrap_or(f64::NAN) - log_gamma(0.5 * nu).unwrap_or(f64::NAN)
        + 0.5 * (p.lambda / (std::f64::consts::PI * nu)).ln();
    let z = y - p.mu;
    norm - half * (p.lambda * z * z / nu).ln_1p()
}

// Data summaries reused by every iteration
struct Stats<'a> {
    data: &'a Dataset,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

impl<'a> Stats<'a> {
    fn new(data: &'a Dataset) -> Self {
        Self {
            xtx: weighted_gram(data.x(), None),
            xty: data.x().tr_mul(data.y()),
            data,
        }
    }

    fn n(&self) -> f64 {
        self.data.n() as f64
    }

    fn d(&self) -> usize {
        self.data.d()
    }

    fn rss(&self, w: &DVector<f64>) -> f64 {
        (self.data.y() - self.data.x() * w).norm_squared()
    }

    // Σ_n x_nᵀ V x_n = Σ_ij (XᵀX)_ij V_ij
    fn trace_term(&self, cov: &DMatrix<f64>) -> f64 {
        self.xtx.component_mul(cov).sum()
    }
}

/// Variational fit with one shared hyper-prior precision.
pub fn fit_linear(
    data: &Dataset,
    priors: &LinearPriors,
    opts: &FitOptions,
) -> Result<LinearPosterior, FitError> {
    fit(data, priors, opts, LinearVariant::Shared)
}

/// Variational fit with automatic relevance determination.
pub fn fit_linear_ard(
    data: &Dataset,
    priors: &LinearPriors,
    opts: &FitOptions,
) -> Result<LinearPosterior, FitError> {
    fit(data, priors, opts, LinearVariant::Ard)
}

/// Fit with α clamped to `alpha`: skips the Q(α) update, so the result is the
/// closed-form normal-inverse-gamma posterior and the bound is the exact log evidence.
pub fn fit_linear_clamped(
    data: &Dataset,
    priors: &LinearPriors,
    alpha: f64,
    opts: &FitOptions,
) -> Result<LinearPosterior, FitError> {
    check_positive("alpha", alpha)?;
    fit(data, priors, opts, LinearVariant::Clamped(alpha))
}

fn fit(
    data: &Dataset,
    priors: &LinearPriors,
    opts: &FitOptions,
    variant: LinearVariant,
) -> Result<LinearPosterior, FitError> {
    priors.validate()?;
    opts.validate()?;
    let stats = Stats::new(data);
    let d = stats.d();
    let a_n = priors.a0 + 0.5 * stats.n();
    let c_n = match variant {
        LinearVariant::Shared => Some(priors.c0 + 0.5 * d as f64),
        LinearVariant::Ard => Some(priors.c0 + 0.5),
        LinearVariant::Clamped(_) => None,
    };
    // cold start at the prior mean of α
    let mut e_alpha = match variant {
        LinearVariant::Shared => Precision::Shared(priors.c0 / priors.d0),
        LinearVariant::Ard => Precision::PerDim(DVector::from_element(d, priors.c0 / priors.d0)),
        LinearVariant::Clamped(a) => Precision::Shared(a),
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut state = None;
    for _ in 0..opts.max_iter {
        // Q(w, τ)
        let alpha_diag = e_alpha.diagonal(d);
        let mut inv_cov = stats.xtx.clone();
        for i in 0..d {
            inv_cov[(i, i)] += alpha_diag[i];
        }
        let factor = chol(&inv_cov)?;
        let cov = factor.inverse();
        let mean = factor.solve(&stats.xty)?;
        let logdet_cov = -factor.logdet();
        let rss = stats.rss(&mean);
        let penalty: f64 = mean
            .iter()
            .zip(alpha_diag.iter())
            .map(|(w, a)| a * w * w)
            .sum();
        let b_n = priors.b0 + 0.5 * (rss + penalty);
        let e_tau = a_n / b_n;

        // Q(α)
        let d_n = match variant {
            LinearVariant::Shared => {
                let dn = priors.d0 + 0.5 * (e_tau * mean.norm_squared() + cov.trace());
                e_alpha = Precision::Shared(c_n.unwrap() / dn);
                Some(Precision::Shared(dn))
            }
            LinearVariant::Ard => {
                let dn = DVector::from_fn(d, |i, _| {
                    priors.d0 + 0.5 * (e_tau * mean[i] * mean[i] + cov[(i, i)])
                });
                e_alpha = Precision::PerDim(dn.map(|v| c_n.unwrap() / v));
                Some(Precision::PerDim(dn))
            }
            LinearVariant::Clamped(_) => None,
        };

        let post = LinearPosterior {
            variant,
            mean,
            cov,
            inv_cov,
            logdet_cov,
            a_n,
            b_n,
            c_n,
            d_n,
            e_alpha: e_alpha.clone(),
            elbo: f64::NAN,
            elbo_history: Vec::new(),
            iterations: history.len() + 1,
            converged: false,
        };
        let elbo = bound(&stats, priors, &post, rss)?;
        let prev = history.last().copied();
        history.push(elbo);
        state = Some(post);
        if let Some(prev) = prev {
            if opts.converged(prev, elbo) {
                converged = true;
                break;
            }
        }
    }
    let mut post = state.expect("max_iter >= 1");
    post.elbo = *history.last().unwrap();
    post.elbo_history = history;
    post.converged = converged;
    Ok(post)
}

/// The variational bound L(Q) of `post` on `data`.
///
/// The hyper-prior block is chosen by `post.variant`; for a clamped α the
/// α-terms reduce to those of a fixed Gaussian prior.
pub fn elbo_linear(
    post: &LinearPosterior,
    data: &Dataset,
    priors: &LinearPriors,
) -> Result<f64, FitError> {
    if data.d() != post.dim() {
        return Err(FitError::Dimension {
            expected: post.dim(),
            found: data.d(),
        });
    }
    let stats = Stats::new(data);
    let rss = stats.rss(&post.mean);
    bound(&stats, priors, post, rss)
}

fn bound(
    stats: &Stats<'_>,
    priors: &LinearPriors,
    post: &LinearPosterior,
    rss: f64,
) -> Result<f64, FitError> {
    let n = stats.n();
    let d = stats.d() as f64;
    let (a_n, b_n) = (post.a_n, post.b_n);
    let e_tau = a_n / b_n;

    let mut l = -0.5 * n * LN_2PI - 0.5 * (e_tau * rss + stats.trace_term(&post.cov))
        + 0.5 * post.logdet_cov
        + 0.5 * d
        - log_gamma(priors.a0)?
        + priors.a0 * priors.b0.ln()
        - priors.b0 * e_tau
        + log_gamma(a_n)?
        - a_n * b_n.ln()
        + a_n;

    match (post.variant, post.c_n, &post.d_n) {
        (LinearVariant::Shared, Some(c_n), Some(Precision::Shared(d_n))) => {
            l += -log_gamma(priors.c0)? + priors.c0 * priors.d0.ln() + log_gamma(c_n)?
                - c_n * d_n.ln();
        }
        (LinearVariant::Ard, Some(c_n), Some(Precision::PerDim(d_n))) => {
            let per_dim = -log_gamma(priors.c0)? + priors.c0 * priors.d0.ln() + log_gamma(c_n)?;
            l += d * per_dim - c_n * d_n.iter().map(|v| v.ln()).sum::<f64>();
        }
        (LinearVariant::Clamped(alpha), _, _) => {
            l += 0.5 * d * alpha.ln()
                - 0.5 * alpha * (e_tau * post.mean.norm_squared() + post.cov.trace());
        }
        _ => {
            return Err(FitError::Invalid(
                "posterior hyper-parameters do not match its variant".into(),
            ))
        }
    }
    Ok(l)
}

/// Student-t predictive density for every row of `x_query`.
pub fn predict_linear(
    post: &LinearPosterior,
    x_query: &DMatrix<f64>,
) -> Result<Vec<StudentTPrediction>, FitError> {
    if x_query.ncols() != post.dim() {
        return Err(FitError::Dimension {
            expected: post.dim(),
            found: x_query.ncols(),
        });
    }
    let mu = x_query * &post.mean;
    let spread = row_quadratic_forms(x_query, &post.cov);
    let e_tau = post.noise_precision();
    let nu = 2.0 * post.a_n;
    Ok(mu
        .iter()
        .zip(spread.iter())
        .map(|(&mu, &s)| StudentTPrediction {
            mu,
            lambda: e_tau / (1.0 + s),
            nu,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> Dataset {
        Dataset::from_xy(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 0.0)).unwrap()
    }

    #[test]
    fn shape_parameters_are_exact() {
        let post = fit_linear(&one_point(), &LinearPriors::default(), &FitOptions::default()).unwrap();
        assert_eq!(post.a_n, 0.51);
        assert_eq!(post.c_n, Some(0.51));
        let ard = fit_linear_ard(&one_point(), &LinearPriors::default(), &FitOptions::default()).unwrap();
        assert_eq!(ard.c_n, Some(0.01 + 0.5));
    }

    #[test]
    fn rejects_bad_priors_and_options() {
        let d = one_point();
        let bad = LinearPriors {
            b0: 0.0,
            ..Default::default()
        };
        assert!(matches!(fit_linear(&d, &bad, &FitOptions::default()), Err(FitError::Invalid(_))));
        let opts = FitOptions {
            rel_tol: 0.0,
            max_iter: 10,
        };
        assert!(fit_linear(&d, &LinearPriors::default(), &opts).is_err());
        let opts = FitOptions {
            rel_tol: 1e-5,
            max_iter: 0,
        };
        assert!(fit_linear(&d, &LinearPriors::default(), &opts).is_err());
        assert!(fit_linear_clamped(&d, &LinearPriors::default(), -1.0, &FitOptions::default()).is_err());
    }

    #[test]
    fn zero_query_predicts_prior_scale() {
        let post = fit_linear(&one_point(), &LinearPriors::default(), &FitOptions::default()).unwrap();
        let p = predict_linear(&post, &DMatrix::zeros(1, 1)).unwrap()[0];
        assert_eq!(p.mu, 0.0);
        assert_eq!(p.lambda, post.a_n / post.b_n);
        assert_eq!(p.nu, 2.0 * post.a_n);
        assert!(predict_linear(&post, &DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn predictive_variance_instance() {
        // a_N = 2, b_N = 1, V_N = I, x = e1: λ = 1, ν = 4, variance 2
        let post = LinearPosterior {
            variant: LinearVariant::Clamped(1.0),
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2),
            inv_cov: DMatrix::identity(2, 2),
            logdet_cov: 0.0,
            a_n: 2.0,
            b_n: 1.0,
            c_n: None,
            d_n: None,
            e_alpha: Precision::Shared(1.0),
            elbo: 0.0,
            elbo_history: vec![],
            iterations: 0,
            converged: true,
        };
        let p = predict_linear(&post, &DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap()[0];
        assert_eq!(p.lambda, 1.0);
        assert_eq!(p.nu, 4.0);
        assert_eq!(p.variance(), Some(2.0));
        assert_eq!((1.0 + 1.0) * post.b_n / (post.a_n - 1.0), 2.0);
    }

    #[test]
    fn student_t_symmetry_and_gaussian_limit() {
        let p = StudentTPrediction {
            mu: 1.5,
            lambda: 2.0,
            nu: 5.0,
        };
        for delta in [0.1, 1.0, 7.0] {
            assert!((p.logpdf(1.5 + delta) - p.logpdf(1.5 - delta)).abs() <= 1e-12);
        }
        let g = StudentTPrediction {
            mu: 0.0,
            lambda: 1.0,
            nu: 1e6,
        };
        assert!((g.logpdf(0.0) + 0.5 * LN_2PI).abs() < 1e-3);
        let low = StudentTPrediction { nu: 2.0, ..p };
        assert_eq!(low.variance(), None);
    }
}
