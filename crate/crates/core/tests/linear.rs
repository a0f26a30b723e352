mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use vbreg::dataio::{gen_linear_coeff, gen_linear_sparse};
use vbreg::*;

fn opts() -> FitOptions {
    FitOptions::default()
}

#[test]
fn clamped_bound_is_exact_evidence() {
    let priors = LinearPriors::default();
    for seed in 0..10 {
        let data = random_linear(seed, 5, 60, 8);
        for alpha in [1e-3, 0.7, 25.0] {
            let post = fit_linear_clamped(&data, &priors, alpha, &opts()).unwrap();
            let exact = nig_log_evidence(&data, &priors, alpha);
            assert!(
                (post.elbo - exact).abs() < 1e-8 * exact.abs().max(1.0),
                "seed {seed} alpha {alpha}: {} vs {exact}",
                post.elbo
            );
        }
    }
}

#[test]
fn clamped_evidence_agrees_with_quadrature_for_one_coefficient() {
    let priors = LinearPriors::default();
    for seed in 0..3 {
        let data = random_linear(100 + seed, 8, 25, 1);
        let closed = nig_log_evidence(&data, &priors, 0.5);
        let quad = nig_log_evidence_2d(&data, &priors, 0.5);
        assert!((closed - quad).abs() < 1e-6, "seed {seed}: {closed} vs {quad}");
    }
}

#[test]
fn single_coefficient_ard_matches_shared() {
    let priors = LinearPriors::default();
    for seed in 0..10 {
        let data = random_linear(200 + seed, 5, 80, 1);
        let shared = fit_linear(&data, &priors, &opts()).unwrap();
        let ard = fit_linear_ard(&data, &priors, &opts()).unwrap();
        assert!((shared.mean[0] - ard.mean[0]).abs() < 1e-8);
        assert!((shared.b_n - ard.b_n).abs() < 1e-8 * shared.b_n);
        assert!((shared.elbo - ard.elbo).abs() < 1e-8 * shared.elbo.abs());
        assert_eq!(shared.c_n, ard.c_n);
    }
}

#[test]
fn closed_form_shapes_and_consistency() {
    let priors = LinearPriors::default();
    for seed in 0..20 {
        let data = random_linear(300 + seed, 3, 120, 12);
        let (n, d) = (data.n() as f64, data.d() as f64);
        for post in [
            fit_linear(&data, &priors, &opts()).unwrap(),
            fit_linear_ard(&data, &priors, &opts()).unwrap(),
        ] {
            assert_eq!(post.a_n, priors.a0 + 0.5 * n);
            let c_expected = match post.variant {
                LinearVariant::Ard => priors.c0 + 0.5,
                _ => priors.c0 + 0.5 * d,
            };
            assert_eq!(post.c_n, Some(c_expected));
            assert!(post.b_n > priors.b0);
            let d_n = post.d_n.as_ref().unwrap().diagonal(data.d());
            assert!(d_n.iter().all(|&v| v > priors.d0));
            let e = post.e_alpha.diagonal(data.d());
            for i in 0..data.d() {
                assert!((e[i] - c_expected / d_n[i]).abs() <= 1e-12 * e[i]);
            }
            let eye = &post.inv_cov * &post.cov;
            assert!((eye - DMatrix::identity(data.d(), data.d())).amax() < 1e-8);
        }
    }
}

#[test]
fn noise_rate_forms_agree() {
    let priors = LinearPriors::default();
    for seed in 0..20 {
        let data = random_linear(400 + seed, 3, 100, 10);
        let post = fit_linear(&data, &priors, &opts()).unwrap();
        let (x, y) = (data.x(), data.y());
        let alpha = post.e_alpha.diagonal(data.d());
        // Σy² − wᵀV⁻¹w with V⁻¹ = diag(E[α]) + XᵀX at the final E[α]
        let mut inv_v = x.tr_mul(x);
        for i in 0..data.d() {
            inv_v[(i, i)] += alpha[i];
        }
        let w = inv_v.clone().cholesky().unwrap().solve(&x.tr_mul(y));
        let quadratic = priors.b0 + 0.5 * (y.dot(y) - w.dot(&(&inv_v * &w)));
        let rss = (x * &w - y).norm_squared();
        let residual = priors.b0
            + 0.5 * (rss + w.iter().zip(alpha.iter()).map(|(w, a)| a * w * w).sum::<f64>());
        assert!((quadratic - residual).abs() < 1e-8 * residual);
    }
}

#[test]
fn row_permutation_does_not_change_the_fit() {
    let priors = LinearPriors::default();
    for seed in 0..5 {
        let data = random_linear(500 + seed, 10, 80, 6);
        let order: Vec<usize> = (0..data.n()).rev().collect();
        let a = fit_linear_ard(&data, &priors, &opts()).unwrap();
        let b = fit_linear_ard(&data.permuted(&order).unwrap(), &priors, &opts()).unwrap();
        assert!((&a.mean - &b.mean).amax() < 1e-9 * a.mean.amax().max(1.0));
        assert!((a.elbo - b.elbo).abs() < 1e-9 * a.elbo.abs());
    }
}

#[test]
fn target_scaling_is_absorbed_by_the_noise_prior() {
    let base = LinearPriors::default();
    let tight = FitOptions {
        rel_tol: 1e-12,
        max_iter: 5000,
    };
    for seed in 0..5 {
        let data = random_linear(600 + seed, 30, 100, 5);
        let s = 3.5;
        let scaled = Dataset::from_xy(data.x().clone(), data.y() * s).unwrap();
        let priors = LinearPriors {
            b0: base.b0 * s * s,
            ..base
        };
        // α is dimensionless relative to τ, so only b0 scales
        let a = fit_linear(&data, &base, &tight).unwrap();
        let b = fit_linear(&scaled, &priors, &tight).unwrap();
        let diff = (&b.mean / s - &a.mean).amax();
        assert!(diff < 1e-6, "seed {seed}: {diff}");
    }
}

#[test]
fn recovers_generating_coefficients() {
    let priors = LinearPriors::default();
    for seed in 0..10 {
        let s = gen_linear_coeff(700 + seed, 100, 10).unwrap();
        let post = fit_linear(&s.train, &priors, &opts()).unwrap();
        let scale = post.b_n / (post.a_n - 1.0);
        for i in 0..4 {
            let err = (post.mean[i] - s.w_true[i]).abs();
            let sd = (post.cov[(i, i)] * scale).sqrt();
            assert!(err < 4.0 * sd && err < 0.4, "seed {seed} coef {i}: {err} (sd {sd})");
        }
    }
}

#[test]
fn ard_prunes_irrelevant_inputs() {
    let priors = LinearPriors::default();
    let mut hits = 0;
    for seed in 0..10 {
        let s = gen_linear_sparse(800 + seed, 20, 5, 200, 10, 1.0).unwrap();
        let post = fit_linear_ard(&s.train, &priors, &opts()).unwrap();
        let e = post.e_alpha.diagonal(20);
        let (mut on, mut off): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        for i in 0..20 {
            if s.w_true[i] != 0.0 {
                on.push(e[i]);
            } else {
                off.push(e[i]);
            }
        }
        if median(off) > 10.0 * median(on) {
            hits += 1;
        }
    }
    assert!(hits >= 8, "{hits}/10");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[test]
fn elbo_rises_over_iterations() {
    let priors = LinearPriors::default();
    for seed in 0..50 {
        let data = random_linear(900 + seed, 3, 200, 30);
        let post = fit_linear(&data, &priors, &opts()).unwrap();
        for w in post.elbo_history.windows(2) {
            assert!(w[1] - w[0] >= -1e-9 * w[1].abs(), "seed {seed}: {w:?}");
        }
        let again = elbo_linear(&post, &data, &priors).unwrap();
        assert!((again - post.elbo).abs() < 1e-9 * post.elbo.abs());
    }
}

#[test]
fn bound_stays_below_evidence_in_one_dimension() {
    let priors = LinearPriors::default();
    for seed in 0..3 {
        let data = random_linear(1000 + seed, 5, 30, 1);
        let post = fit_linear(&data, &priors, &opts()).unwrap();
        assert!(post.elbo <= linear_log_evidence(&data, &priors) + 1e-4);
    }
}

#[test]
fn predictive_variance_matches_closed_form() {
    let priors = LinearPriors::default();
    let data = random_linear(1100, 40, 60, 4);
    let post = fit_linear(&data, &priors, &opts()).unwrap();
    let mut r = rng(1101);
    let q = normal_matrix(&mut r, 7, data.d());
    for (i, p) in predict_linear(&post, &q).unwrap().iter().enumerate() {
        let x = q.row(i).transpose();
        assert!((p.mu - post.mean.dot(&x)).abs() < 1e-12 * p.mu.abs().max(1.0));
        assert_eq!(p.nu, 2.0 * post.a_n);
        let expected = (1.0 + x.dot(&(&post.cov * &x))) * post.b_n / (post.a_n - 1.0);
        assert!((p.variance().unwrap() - expected).abs() < 1e-10 * expected);
    }
}

#[test]
fn predictions_are_rowwise() {
    let priors = LinearPriors::default();
    let data = random_linear(1200, 20, 40, 3);
    let post = fit_linear_ard(&data, &priors, &opts()).unwrap();
    let q = normal_matrix(&mut rng(1201), 5, data.d());
    let all = predict_linear(&post, &q).unwrap();
    for (i, p) in all.iter().enumerate() {
        let one = predict_linear(&post, &q.rows(i, 1).into_owned()).unwrap();
        assert_eq!(one[0], *p);
    }
    assert!(predict_linear(&post, &DMatrix::zeros(1, data.d() + 1)).is_err());
}

#[test]
fn rejects_invalid_priors_and_options() {
    let data = random_linear(1300, 5, 10, 2);
    let bad = LinearPriors {
        c0: 0.0,
        ..LinearPriors::default()
    };
    assert!(fit_linear(&data, &bad, &opts()).is_err());
    let bad_opts = FitOptions {
        rel_tol: 1.5,
        max_iter: 10,
    };
    assert!(fit_linear(&data, &LinearPriors::default(), &bad_opts).is_err());
    assert!(fit_linear_clamped(&data, &LinearPriors::default(), -1.0, &opts()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn student_t_density_is_location_scale(
        mu in -50.0f64..50.0,
        lambda in 1e-3f64..1e3,
        nu in 0.5f64..200.0,
        z in -20.0f64..20.0,
        shift in -10.0f64..10.0,
    ) {
        let p = StudentTPrediction { mu, lambda, nu };
        let q = StudentTPrediction { mu: mu + shift, lambda, nu };
        let y = mu + z / lambda.sqrt();
        prop_assert!((p.logpdf(y) - q.logpdf(y + shift)).abs() < 1e-9);
        // rescaling y by c changes λ by c⁻² and the density by c⁻¹
        let c = 2.5;
        let r = StudentTPrediction { mu: c * mu, lambda: lambda / (c * c), nu };
        prop_assert!((p.logpdf(y) - (r.logpdf(c * y) + c.ln())).abs() < 1e-9);
        prop_assert!(p.logpdf(mu) >= p.logpdf(y));
    }

    #[test]
    fn fit_is_deterministic(seed in 0u64..1000) {
        let data = random_linear(seed, 2, 30, 5);
        let priors = LinearPriors::default();
        let a = fit_linear(&data, &priors, &opts()).unwrap();
        let b = fit_linear(&data, &priors, &opts()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn fixed_alpha_bound_matches_the_clamped_fit() {
    let priors = LinearPriors::default();
    let data = random_linear(1400, 20, 30, 3);
    let post = fit_linear_clamped(&data, &priors, 2.0, &opts()).unwrap();
    let x = data.x();
    let mut inv_v = x.tr_mul(x);
    for i in 0..data.d() {
        inv_v[(i, i)] += 2.0;
    }
    let w: DVector<f64> = inv_v.clone().cholesky().unwrap().solve(&x.tr_mul(data.y()));
    assert!((&post.mean - &w).amax() < 1e-10);
    assert!((elbo_linear(&post, &data, &priors).unwrap() - post.elbo).abs() < 1e-10 * post.elbo.abs());
}
