//! Variational Bayesian logistic regression.
//!
//! The sigmoid likelihood is replaced by the exponential-quadratic lower bound
//! σ(z) ≥ σ(ξ) exp((z − ξ)/2 − λ(ξ)(z² − ξ²)), one ξ per observation, which
//! keeps Q(w) Gaussian. The batch fits put a Gamma hyper-prior on the prior
//! precision α (shared or per coefficient); the incremental fit uses the fixed
//! prior N(0, D⁻¹I) and visits every observation once.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataio::LabelDataset;
use crate::fit::{check_positive, FitError, FitOptions, Precision};
use crate::numerics::{
    bound_offset, chol, lambda_xi, log_gamma, rank1_inv_update, rank1_logdet_update,
    row_quadratic_forms, weighted_gram,
};

/// Gamma hyper-prior Gam(α | a0, b0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitPriors {
    pub a0: f64,
    pub b0: f64,
}

impl Default for LogitPriors {
    fn default() -> Self {
        Self { a0: 1e-2, b0: 1e-4 }
    }
}

impl LogitPriors {
    pub fn validate(&self) -> Result<(), FitError> {
        check_positive("a0", self.a0)?;
        check_positive("b0", self.b0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogitVariant {
    Shared,
    Ard,
    /// Single pass with the fixed prior N(0, D⁻¹I).
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitPosterior {
    pub variant: LogitVariant,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub inv_cov: DMatrix<f64>,
    pub logdet_cov: f64,
    /// Hyper-posterior Gam(α | a_N, b_N); absent for the incremental fit.
    pub a_n: Option<f64>,
    pub b_n: Option<Precision>,
    pub e_alpha: Option<Precision>,
    /// Local bound parameters, one per observation, all ≥ 0.
    pub xi: DVector<f64>,
    /// Final L̃ over the whole dataset.
    pub bound: f64,
    /// Bound trace: one segment for the batch fits, one per observation for
    /// the incremental fit (the per-datum objective L_j).
    pub bound_history: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogitPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// ξ² = xᵀ(V + w wᵀ)x, returned as its nonnegative root.
pub fn update_xi(w: &DVector<f64>, v: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let m = w.dot(x);
    let s = x.dot(&(v * x));
    (s + m * m).max(0.0).sqrt()
}

fn batch_xi(x: &DMatrix<f64>, w: &DVector<f64>, v: &DMatrix<f64>) -> DVector<f64> {
    let m = x * w;
    row_quadratic_forms(x, v).zip_map(&m, |s, m| (s + m * m).max(0.0).sqrt())
}

fn offsets(xi: &DVector<f64>) -> f64 {
    xi.iter().map(|&x| bound_offset(x)).sum()
}

/// Batch fit with one shared hyper-prior precision.
pub fn fit_logit(
    data: &LabelDataset,
    priors: &LogitPriors,
    opts: &FitOptions,
) -> Result<LogitPosterior, FitError> {
    fit_batch(data, priors, opts, false)
}

/// Batch fit with one hyper-prior precision per coefficient.
pub fn fit_logit_ard(
    data: &LabelDataset,
    priors: &LogitPriors,
    opts: &FitOptions,
) -> Result<LogitPosterior, FitError> {
    fit_batch(data, priors, opts, true)
}

struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    inv_cov: DMatrix<f64>,
    logdet_cov: f64,
}

// Q(w) for the given ξ and prior precisions
fn solve_w(
    x: &DMatrix<f64>,
    t: &DVector<f64>,
    xi: &DVector<f64>,
    alpha: &DVector<f64>,
) -> Result<GaussianState, FitError> {
    let lam = xi.map(|v| 2.0 * lambda_xi(v));
    let mut inv_cov = weighted_gram(x, Some(&lam));
    for i in 0..alpha.len() {
        inv_cov[(i, i)] += alpha[i];
    }
    let factor = chol(&inv_cov)?;
    Ok(GaussianState {
        mean: factor.solve(t)?,
        cov: factor.inverse(),
        logdet_cov: -factor.logdet(),
        inv_cov,
    })
}

fn hyper_terms(priors: &LogitPriors, a_n: f64, b_n: &Precision) -> Result<f64, FitError> {
    let per_dim = -log_gamma(priors.a0)? + priors.a0 * priors.b0.ln() + log_gamma(a_n)? + a_n;
    let term = |b: f64| per_dim - priors.b0 * a_n / b - a_n * b.ln();
    Ok(match b_n {
        Precision::Shared(b) => term(*b),
        Precision::PerDim(b) => b.iter().map(|&b| term(b)).sum(),
    })
}

fn fit_batch(
    data: &LabelDataset,
    priors: &LogitPriors,
    opts: &FitOptions,
    ard: bool,
) -> Result<LogitPosterior, FitError> {
    priors.validate()?;
    opts.validate()?;
    let x = data.x();
    let (n, d) = (data.n(), data.d());
    let t = x.tr_mul(data.y()) * 0.5;
    let a_n = priors.a0 + if ard { 0.5 } else { 0.5 * d as f64 };

    // ξ = 0 and E[α] = a0/b0; b_N is set so that a_N/b_N equals that E[α],
    // which keeps the first bound exact
    let b_init = priors.b0 * a_n / priors.a0;
    let mut b_n = if ard {
        Precision::PerDim(DVector::from_element(d, b_init))
    } else {
        Precision::Shared(b_init)
    };
    let mut xi = DVector::zeros(n);
    let alpha = DVector::from_element(d, priors.a0 / priors.b0);
    let mut q = solve_w(x, &t, &xi, &alpha)?;
    let mut bound = printed_bound(&q, -(n as f64) * std::f64::consts::LN_2, priors, a_n, &b_n)?;
    let mut history = vec![bound];
    let mut converged = false;
    let mut iterations = 0;
    let mut xi_next = batch_xi(x, &q.mean, &q.cov);

    while iterations < opts.max_iter {
        iterations += 1;
        xi = xi_next;
        b_n = if ard {
            Precision::PerDim(DVector::from_fn(d, |i, _| {
                priors.b0 + 0.5 * (q.mean[i] * q.mean[i] + q.cov[(i, i)])
            }))
        } else {
            Precision::Shared(priors.b0 + 0.5 * (q.mean.norm_squared() + q.cov.trace()))
        };
        let alpha = b_n.diagonal(d).map(|b| a_n / b);
        q = solve_w(x, &t, &xi, &alpha)?;
        let next = printed_bound(&q, offsets(&xi), priors, a_n, &b_n)?;
        history.push(next);
        // the bound is flat in ξ near the optimum, so ξ is checked separately
        xi_next = batch_xi(x, &q.mean, &q.cov);
        let settled = xi_next
            .iter()
            .zip(xi.iter())
            .all(|(a, b)| (a * a - b * b).abs() <= opts.rel_tol * a * a);
        let done = opts.converged(bound, next) && settled;
        bound = next;
        if done {
            converged = true;
            break;
        }
    }

    let e_alpha = match &b_n {
        Precision::Shared(b) => Precision::Shared(a_n / b),
        Precision::PerDim(b) => Precision::PerDim(b.map(|b| a_n / b)),
    };
    Ok(LogitPosterior {
        variant: if ard { LogitVariant::Ard } else { LogitVariant::Shared },
        mean: q.mean,
        cov: q.cov,
        inv_cov: q.inv_cov,
        logdet_cov: q.logdet_cov,
        a_n: Some(a_n),
        b_n: Some(b_n),
        e_alpha: Some(e_alpha),
        xi,
        bound,
        bound_history: vec![history],
        iterations,
        converged,
    })
}

// ½wᵀV⁻¹w + ½ln|V| + Σ offsets + hyper-prior terms; exact when (w, V) is the
// optimum for the current ξ and E[α] = a_N/b_N
fn printed_bound(
    q: &GaussianState,
    offsets: f64,
    priors: &LogitPriors,
    a_n: f64,
    b_n: &Precision,
) -> Result<f64, FitError> {
    let quad = q.mean.dot(&(&q.inv_cov * &q.mean));
    Ok(0.5 * quad + 0.5 * q.logdet_cov + offsets + hyper_terms(priors, a_n, b_n)?)
}

/// Single pass over the observations in input order under the fixed prior
/// N(0, D⁻¹I). V and V⁻¹ are carried together by rank-one updates and ln|V|
/// by the determinant lemma; each observation gets its own inner loop on ξ_j.
///
/// An empty dataset needs a dimension, so the prior is returned by
/// [`logit_prior_fixed`] instead.
pub fn fit_logit_iter(data: &LabelDataset, opts: &FitOptions) -> Result<LogitPosterior, FitError> {
    opts.validate()?;
    let mut post = logit_prior_fixed(data.d());
    let x = data.x();
    let y = data.y();
    let n = data.n();
    post.xi = DVector::zeros(n);
    post.converged = true;
    for j in 0..n {
        let xj = x.row(j).transpose();
        // V_{j−1}⁻¹ w_{j−1} + y_j/2 x_j
        let h = &post.inv_cov * &post.mean + &xj * (0.5 * y[j]);
        let mut xi = 0.0;
        let mut step = datum_step(&post, &xj, &h, xi)?;
        let mut segment = vec![step.bound];
        let mut done = false;
        for _ in 0..opts.max_iter {
            post.iterations += 1;
            xi = update_xi(&step.mean, &step.cov, &xj);
            let next = datum_step(&post, &xj, &h, xi)?;
            segment.push(next.bound);
            let stop = opts.converged(step.bound, next.bound);
            step = next;
            if stop {
                done = true;
                break;
            }
        }
        post.converged &= done;
        let c = 2.0 * lambda_xi(xi);
        for r in 0..post.dim() {
            for col in 0..post.dim() {
                post.inv_cov[(r, col)] += c * (xj[r] * xj[col]);
            }
        }
        post.mean = step.mean;
        post.cov = step.cov;
        post.logdet_cov = step.logdet_cov;
        post.xi[j] = xi;
        post.bound_history.push(segment);
    }
    let d = post.dim() as f64;
    let quad = post.mean.dot(&(&post.inv_cov * &post.mean));
    post.bound = 0.5 * quad + 0.5 * post.logdet_cov + 0.5 * d * d.ln() + offsets(&post.xi);
    Ok(post)
}

/// The fixed prior N(0, D⁻¹I) of the incremental fit, as a posterior over zero observations.
pub fn logit_prior_fixed(d: usize) -> LogitPosterior {
    let df = d as f64;
    LogitPosterior {
        variant: LogitVariant::Incremental,
        mean: DVector::zeros(d),
        cov: DMatrix::identity(d, d) / df,
        inv_cov: DMatrix::identity(d, d) * df,
        logdet_cov: -df * df.ln(),
        a_n: None,
        b_n: None,
        e_alpha: None,
        xi: DVector::zeros(0),
        bound: 0.0,
        bound_history: Vec::new(),
        iterations: 0,
        converged: true,
    }
}

struct DatumStep {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    logdet_cov: f64,
    bound: f64,
}

fn datum_step(
    prev: &LogitPosterior,
    xj: &DVector<f64>,
    h: &DVector<f64>,
    xi: f64,
) -> Result<DatumStep, FitError> {
    let c = 2.0 * lambda_xi(xi);
    let cov = rank1_inv_update(&prev.cov, xj, c)?;
    let logdet_cov = rank1_logdet_update(prev.logdet_cov, &prev.cov, xj, c)?;
    let mean = &cov * h;
    // wᵀV⁻¹w = wᵀh since V⁻¹w = h
    let bound = 0.5 * mean.dot(h) + 0.5 * logdet_cov + bound_offset(xi);
    Ok(DatumStep {
        mean,
        cov,
        logdet_cov,
        bound,
    })
}

/// L̃(Q, ξ) of an arbitrary state on `data`, using its stored ξ.
///
/// This is the general expression, valid whether or not (w_N, V_N) are the
/// optimum for ξ; at the fixed points produced by the fits it equals the
/// reported bound. The incremental variant uses the fixed prior N(0, D⁻¹I)
/// and no hyper-prior terms.
pub fn logit_bound(
    post: &LogitPosterior,
    data: &LabelDataset,
    priors: &LogitPriors,
) -> Result<f64, FitError> {
    let d = post.dim();
    if data.d() != d {
        return Err(FitError::Dimension {
            expected: d,
            found: data.d(),
        });
    }
    if post.xi.len() != data.n() {
        return Err(FitError::Invalid(format!(
            "state holds {} ξ values for {} observations",
            post.xi.len(),
            data.n()
        )));
    }
    let x = data.x();
    let t = x.tr_mul(data.y()) * 0.5;
    let lam = post.xi.map(|v| 2.0 * lambda_xi(v));
    let (prior_prec, extra) = match (post.variant, post.a_n, &post.b_n) {
        (LogitVariant::Incremental, _, _) => {
            let df = d as f64;
            (DVector::from_element(d, df), 0.5 * df * df.ln())
        }
        (_, Some(a_n), Some(b_n)) => (
            b_n.diagonal(d).map(|b| a_n / b),
            hyper_terms(priors, a_n, b_n)?,
        ),
        _ => {
            return Err(FitError::Invalid(
                "posterior lacks hyper-posterior parameters".into(),
            ))
        }
    };
    let mut precision = weighted_gram(x, Some(&lam));
    for i in 0..d {
        precision[(i, i)] += prior_prec[i];
    }
    let second_moment = &post.cov + &post.mean * post.mean.transpose();
    let quad = precision.component_mul(&second_moment).sum();
    Ok(post.mean.dot(&t) - 0.5 * quad + 0.5 * post.logdet_cov + 0.5 * d as f64
        + offsets(&post.xi)
        + extra)
}

/// Converged per-query quantities of the predictive bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitPredictState {
    /// Ṽ = (V_N⁻¹ + 2λ(ξ) x xᵀ)⁻¹.
    pub v_tilde: DMatrix<f64>,
    /// w̃ = Ṽ(V_N⁻¹ w_N + x/2).
    pub w_tilde: DVector<f64>,
    pub xi: f64,
    /// Lower bound on ln P(y = 1 | x).
    pub log_p: f64,
    pub iterations: usize,
}

// ln P and the next ξ depend on x only through s = xᵀV_N x and m = w_Nᵀx
fn predictive_scalar(s: f64, m: f64, opts: &FitOptions) -> (f64, f64, usize) {
    let eval = |xi: f64| {
        let lam = lambda_xi(xi);
        let k = 1.0 + 2.0 * lam * s;
        let log_p = -0.5 * k.ln() + (0.5 * m - lam * m * m + 0.125 * s) / k + bound_offset(xi);
        let proj = (m + 0.5 * s) / k;
        let next = (s / k + proj * proj).max(0.0).sqrt();
        (log_p, next)
    };
    let mut xi = 0.0;
    let (mut log_p, mut next) = eval(xi);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        xi = next;
        let (lp, nx) = eval(xi);
        // ln P is stationary in ξ, so also wait for ξ² itself to settle
        let stop = (lp - log_p).abs() <= opts.rel_tol * lp.abs()
            && (nx * nx - xi * xi).abs() <= opts.rel_tol * xi * xi;
        log_p = lp;
        next = nx;
        if stop {
            break;
        }
    }
    (log_p, xi, iterations)
}

fn check_query(post: &LogitPosterior, width: usize) -> Result<(), FitError> {
    if width != post.dim() {
        return Err(FitError::Dimension {
            expected: post.dim(),
            found: width,
        });
    }
    Ok(())
}

/// P(y = 1 | x) for every row of `x_query`, each with its own optimized ξ.
pub fn predict_logit(
    post: &LogitPosterior,
    x_query: &DMatrix<f64>,
    opts: &FitOptions,
) -> Result<Vec<f64>, FitError> {
    check_query(post, x_query.ncols())?;
    opts.validate()?;
    let m = x_query * &post.mean;
    let s = row_quadratic_forms(x_query, &post.cov);
    Ok(s.iter()
        .zip(m.iter())
        .map(|(&s, &m)| predictive_scalar(s, m, opts).0.exp().clamp(0.0, 1.0))
        .collect())
}

/// The full predictive state for a single query.
pub fn predict_logit_state(
    post: &LogitPosterior,
    x: &DVector<f64>,
    opts: &FitOptions,
) -> Result<LogitPredictState, FitError> {
    check_query(post, x.len())?;
    opts.validate()?;
    let s = x.dot(&(&post.cov * x));
    let m = post.mean.dot(x);
    let (log_p, xi, iterations) = predictive_scalar(s, m, opts);
    let v_tilde = rank1_inv_update(&post.cov, x, 2.0 * lambda_xi(xi))?;
    let w_tilde = &v_tilde * (&post.inv_cov * &post.mean + x * 0.5);
    Ok(LogitPredictState {
        v_tilde,
        w_tilde,
        xi,
        log_p,
        iterations,
    })
}
