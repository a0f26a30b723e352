#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vbreg::numerics::{log_gamma, log_sigmoid};
use vbreg::{Dataset, LabelDataset, LinearPriors};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random regression problem with N ∈ [n_min, n_max], D ∈ [1, d_max].
pub fn random_linear(seed: u64, n_min: usize, n_max: usize, d_max: usize) -> Dataset {
    let mut r = rng(seed);
    let n = r.random_range(n_min..=n_max);
    let d = r.random_range(1..=d_max);
    let x = normal_matrix(&mut r, n, d);
    let w = normal_vector(&mut r, d) * r.random_range(0.1..3.0);
    let noise = r.random_range(0.05..2.0);
    let y = &x * &w + normal_vector(&mut r, n) * noise;
    Dataset::from_xy(x, y).unwrap()
}

/// Random classification problem with labels drawn from σ(xᵀw).
pub fn random_logit(seed: u64, n_min: usize, n_max: usize, d_max: usize) -> LabelDataset {
    let mut r = rng(seed);
    let n = r.random_range(n_min..=n_max);
    let d = r.random_range(1..=d_max);
    let x = normal_matrix(&mut r, n, d);
    let w = normal_vector(&mut r, d) * r.random_range(0.2..2.0);
    let z = &x * &w;
    let y = z.map(|z| {
        if r.random::<f64>() < 1.0 / (1.0 + (-z).exp()) {
            1.0
        } else {
            -1.0
        }
    });
    LabelDataset::try_from(Dataset::from_xy(x, y).unwrap()).unwrap()
}

/// D = 1 classification data whose likelihood is bounded (some y·x of each sign).
pub fn nonseparable_1d(seed: u64, n: usize, w: f64) -> LabelDataset {
    let mut r = rng(seed);
    loop {
        let x = normal_vector(&mut r, n);
        let y = x.map(|x| {
            if r.random::<f64>() < 1.0 / (1.0 + (-w * x).exp()) {
                1.0
            } else {
                -1.0
            }
        });
        let margins = x.component_mul(&y);
        if margins.iter().any(|&m| m > 0.0) && margins.iter().any(|&m| m < 0.0) {
            let x = DMatrix::from_column_slice(n, 1, x.as_slice());
            return LabelDataset::try_from(Dataset::from_xy(x, y).unwrap()).unwrap();
        }
    }
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// ln ∫ exp(g(u)) du by the composite Simpson rule, computed stably in log space.
pub fn log_simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|i| g(a + h * i as f64)).collect();
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (i, v) in vals.iter().enumerate() {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * (v - top).exp();
    }
    top + (s * h / 3.0).ln()
}

/// ln Gam(α | shape, rate).
pub fn log_gamma_pdf(alpha: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - log_gamma(shape).unwrap() + (shape - 1.0) * alpha.ln() - rate * alpha
}

/// Exact ln p(y | X, α) of the normal-inverse-gamma model with fixed α.
pub fn nig_log_evidence(data: &Dataset, priors: &LinearPriors, alpha: f64) -> f64 {
    let x = data.x();
    let y = data.y();
    let (n, d) = (data.n() as f64, data.d());
    let mut inv_v = x.tr_mul(x);
    for i in 0..d {
        inv_v[(i, i)] += alpha;
    }
    let lu = inv_v.clone().lu();
    let w = lu.solve(&x.tr_mul(y)).unwrap();
    let logdet_inv = lu.determinant().ln();
    let a_n = priors.a0 + 0.5 * n;
    let b_n = priors.b0 + 0.5 * (y.dot(y) - w.dot(&(&inv_v * &w)));
    -0.5 * n * LN_2PI + 0.5 * d as f64 * alpha.ln() - 0.5 * logdet_inv + priors.a0 * priors.b0.ln()
        - a_n * b_n.ln()
        + log_gamma(a_n).unwrap()
        - log_gamma(priors.a0).unwrap()
}

/// ln p(y | X) of the linear model with the Gamma hyper-prior on α, by
/// Simpson quadrature over u = ln α of the exact fixed-α evidence.
pub fn linear_log_evidence(data: &Dataset, priors: &LinearPriors) -> f64 {
    log_simpson(
        |u| {
            let alpha = u.exp();
            nig_log_evidence(data, priors, alpha) + log_gamma_pdf(alpha, priors.c0, priors.d0) + u
        },
        -200.0,
        30.0,
        46_000,
    )
}

/// ln p(y | X, α) for D = 1 by 2-D quadrature over (w, ln τ).
pub fn nig_log_evidence_2d(data: &Dataset, priors: &LinearPriors, alpha: f64) -> f64 {
    assert_eq!(data.d(), 1);
    let x = data.x().column(0).into_owned();
    let y = data.y().clone();
    let n = data.n() as f64;
    let sxx = x.dot(&x);
    let sxy = x.dot(&y);
    let syy = y.dot(&y);
    let w_hat = sxy / (sxx + alpha);
    // joint over (w, τ): ln N(y | xw, 1/τ) + ln N(w | 0, 1/(τα)) + ln Gam(τ) + ln τ (Jacobian)
    let joint = |w: f64, v: f64| {
        let tau = v.exp();
        let rss = syy - 2.0 * w * sxy + w * w * sxx;
        0.5 * n * (v - LN_2PI) - 0.5 * tau * rss + 0.5 * (v + alpha.ln() - LN_2PI)
            - 0.5 * tau * alpha * w * w
            + log_gamma_pdf(tau, priors.a0, priors.b0)
            + v
    };
    // τ concentrates near N / rss_min; w within a few posterior widths of w_hat
    let rss_min = syy - sxy * sxy / (sxx + alpha);
    let v_mode = ((n + 1.0) / rss_min.max(1e-300)).ln();
    log_simpson(
        |v| {
            let tau = v.exp();
            let sd = (1.0 / (tau * (sxx + alpha))).sqrt();
            log_simpson(|w| joint(w, v), w_hat - 40.0 * sd, w_hat + 40.0 * sd, 400)
        },
        v_mode - 25.0,
        v_mode + 12.0,
        3000,
    )
}

/// ln P(y | X) of the D = 1 logistic model with the Gamma hyper-prior, by
/// nested Simpson quadrature over u = ln α and w.
pub fn logit_log_evidence(data: &LabelDataset, a0: f64, b0: f64) -> f64 {
    assert_eq!(data.d(), 1);
    let margins: Vec<f64> = data
        .x()
        .column(0)
        .iter()
        .zip(data.y().iter())
        .map(|(x, y)| x * y)
        .collect();
    let log_lik = |w: f64| margins.iter().map(|m| log_sigmoid(m * w)).sum::<f64>();
    // region where the likelihood is within e^-80 of its maximum
    let peak = (-4000..=4000)
        .map(|i| i as f64 * 0.01)
        .map(|w| (w, log_lik(w)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let reach = |dir: f64| {
        let mut step = 0.01;
        let mut w = peak.0;
        while log_lik(w) > peak.1 - 80.0 {
            w += dir * step;
            step *= 1.05;
        }
        w
    };
    let (lo_lik, hi_lik) = (reach(-1.0), reach(1.0));
    log_simpson(
        |u| {
            let alpha = u.exp();
            let width = 14.0 / alpha.sqrt();
            let lo = lo_lik.max(-width);
            let hi = hi_lik.min(width);
            let inner = if lo < hi {
                log_simpson(
                    |w| log_lik(w) + 0.5 * (u - LN_2PI) - 0.5 * alpha * w * w,
                    lo,
                    hi,
                    2000,
                )
            } else {
                f64::NEG_INFINITY
            };
            inner + log_gamma_pdf(alpha, a0, b0) + u
        },
        -120.0,
        25.0,
        2900,
    )
}

/// ∫ σ(w x) N(w | m, s²) dw for scalar x, by Simpson quadrature.
pub fn sigmoid_gaussian(x: f64, m: f64, s: f64) -> f64 {
    let f = |w: f64| {
        let z = (w - m) / s;
        (log_sigmoid(w * x) - 0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    };
    simpson(f, m - 12.0 * s, m + 12.0 * s, 20_000)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
