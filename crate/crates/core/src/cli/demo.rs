//! Regenerates the synthetic experiments: data, fits, predictions and metrics.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};

use super::baselines::{fisher_discriminant, least_squares};
use super::document::PosteriorDocument;
use super::{
    save_rows, write_linear_predictions, write_logit_predictions, write_selection, CliError,
};
use crate::dataio::{
    gen_linear_coeff, gen_linear_sparse, gen_logit_plane, gen_logit_sparse, gen_polynomial,
    save_dataset, Dataset, LabelDataset, PolyKind, Seed,
};
use crate::fit::FitOptions;
use crate::linear::{fit_linear, fit_linear_ard, predict_linear, LinearPosterior, LinearPriors};
use crate::logit::{
    fit_logit, fit_logit_ard, fit_logit_iter, predict_logit, LogitPosterior, LogitPriors,
};
use crate::select::{select_model, CandidatePosterior, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    /// Intercept plus three regressors, coefficients (1, 2, 3, 5).
    Coeff,
    /// 100 informative dimensions, 150 observations.
    Highdim,
    /// 1000 dimensions of which 100 are informative, 500 observations.
    Sparse,
    /// Polynomial order selection on 10 noisy points.
    Modelsel,
    /// Three-feature classification with a separating plane.
    LogitCoeff,
    /// 1000 dimensions of which 100 are informative, 2000 observations.
    LogitHighdim,
    /// Polynomial order selection for 50 labelled points.
    LogitModelsel,
}

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub example: Example,
    pub seed: Seed,
    pub outdir: PathBuf,
    pub n: Option<usize>,
    pub n_test: Option<usize>,
    pub d: Option<usize>,
    pub d_eff: Option<usize>,
    pub baselines: bool,
}

struct Metric {
    method: &'static str,
    train: f64,
    test: f64,
}

const X_RANGE: (f64, f64) = (-5.0, 5.0);
const ORDERS: std::ops::RangeInclusive<usize> = 1..=10;
const BASELINE_ORDER: usize = 6;

pub fn run_demo(cfg: &DemoConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.outdir).map_err(|e| {
        CliError::Data(format!("cannot create {}: {e}", cfg.outdir.display()))
    })?;
    let metrics = match cfg.example {
        Example::Coeff => {
            let s = gen_linear_coeff(cfg.seed, cfg.n.unwrap_or(100), cfg.n_test.unwrap_or(100))?;
            linear_demo(cfg, &s.train, &s.test, false)?
        }
        Example::Highdim => {
            let d = cfg.d.unwrap_or(100);
            let s = gen_linear_sparse(
                cfg.seed,
                d,
                cfg.d_eff.unwrap_or(d),
                cfg.n.unwrap_or(150),
                cfg.n_test.unwrap_or(50),
                1.0,
            )?;
            linear_demo(cfg, &s.train, &s.test, false)?
        }
        Example::Sparse => {
            let s = gen_linear_sparse(
                cfg.seed,
                cfg.d.unwrap_or(1000),
                cfg.d_eff.unwrap_or(100),
                cfg.n.unwrap_or(500),
                cfg.n_test.unwrap_or(50),
                1.0,
            )?;
            linear_demo(cfg, &s.train, &s.test, true)?
        }
        Example::Modelsel => linear_modelsel(cfg)?,
        Example::LogitCoeff => {
            let s = gen_logit_plane(cfg.seed, cfg.n.unwrap_or(100), cfg.n_test.unwrap_or(1000), 5.0)?;
            logit_demo(cfg, &s.train, &s.test, false, true)?
        }
        Example::LogitHighdim => {
            let s = gen_logit_sparse(
                cfg.seed,
                cfg.d.unwrap_or(1000),
                cfg.d_eff.unwrap_or(100),
                cfg.n.unwrap_or(2000),
                cfg.n_test.unwrap_or(10000),
            )?;
            logit_demo(cfg, &s.train, &s.test, true, false)?
        }
        Example::LogitModelsel => logit_modelsel(cfg)?,
    };
    let label = if matches!(
        cfg.example,
        Example::LogitCoeff | Example::LogitHighdim | Example::LogitModelsel
    ) {
        ("train_loss", "test_loss")
    } else {
        ("train_mse", "test_mse")
    };
    let rows: Vec<Vec<String>> = metrics
        .iter()
        .map(|m| {
            vec![
                m.method.to_owned(),
                crate::dataio::format_number(m.train),
                crate::dataio::format_number(m.test),
            ]
        })
        .collect();
    save_rows(&cfg.outdir.join("metrics.csv"), &["method", label.0, label.1], &rows)?;
    for m in &metrics {
        println!("{:<8} {} = {:.6}  {} = {:.6}", m.method, label.0, m.train, label.1, m.test);
    }
    Ok(())
}

fn mse(pred: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (pred - y).norm_squared() / y.len() as f64
}

fn zero_one(p_pos: &[f64], y: &DVector<f64>) -> f64 {
    let wrong = p_pos
        .iter()
        .zip(y.iter())
        .filter(|(&p, &y)| (p > 0.5) != (y > 0.0))
        .count();
    wrong as f64 / y.len() as f64
}

fn zero_one_labels(pred: &DVector<f64>, y: &DVector<f64>) -> f64 {
    pred.iter().zip(y.iter()).filter(|(a, b)| a != b).count() as f64 / y.len() as f64
}

fn write_data(dir: &Path, train: &Dataset, test: &Dataset) -> Result<(), CliError> {
    save_dataset(&dir.join("train.csv"), train)?;
    save_dataset(&dir.join("test.csv"), test)?;
    Ok(())
}

fn linear_metric(
    dir: &Path,
    method: &'static str,
    post: &LinearPosterior,
    train: &Dataset,
    test: &Dataset,
) -> Result<Metric, CliError> {
    let priors = LinearPriors::default();
    PosteriorDocument::from_linear(post, &priors, &FitOptions::default(), train.feature_names())?
        .save(&dir.join(format!("posterior_{method}.json")))?;
    let on_train = predict_linear(post, train.x())?;
    let on_test = predict_linear(post, test.x())?;
    write_linear_predictions(&dir.join(format!("predictions_{method}.csv")), &on_test)?;
    let means = |p: &[crate::linear::StudentTPrediction]| DVector::from_iterator(p.len(), p.iter().map(|q| q.mu));
    Ok(Metric {
        method,
        train: mse(&means(&on_train), train.y()),
        test: mse(&means(&on_test), test.y()),
    })
}

fn ml_metric(train: &Dataset, test: &Dataset) -> Result<Metric, CliError> {
    let w = least_squares(train.x(), train.y())
        .ok_or_else(|| CliError::Numerical("least-squares baseline failed".into()))?;
    Ok(Metric {
        method: "ml",
        train: mse(&(train.x() * &w), train.y()),
        test: mse(&(test.x() * &w), test.y()),
    })
}

fn linear_demo(
    cfg: &DemoConfig,
    train: &Dataset,
    test: &Dataset,
    ard: bool,
) -> Result<Vec<Metric>, CliError> {
    let dir = &cfg.outdir;
    write_data(dir, train, test)?;
    let priors = LinearPriors::default();
    let opts = FitOptions::default();
    let mut metrics = Vec::new();
    if cfg.baselines {
        metrics.push(ml_metric(train, test)?);
    }
    let vb = fit_linear(train, &priors, &opts)?;
    metrics.push(linear_metric(dir, "vb", &vb, train, test)?);
    if ard {
        let vb_ard = fit_linear_ard(train, &priors, &opts)?;
        metrics.push(linear_metric(dir, "vb-ard", &vb_ard, train, test)?);
    }
    Ok(metrics)
}

fn orders() -> Vec<usize> {
    ORDERS.collect()
}

fn linear_modelsel(cfg: &DemoConfig) -> Result<Vec<Metric>, CliError> {
    let dir = &cfg.outdir;
    let s = gen_polynomial(
        cfg.seed,
        3,
        cfg.n.unwrap_or(10),
        cfg.n_test.unwrap_or(100),
        X_RANGE,
        1.0,
        PolyKind::Linear,
    )?;
    save_raw(dir, &s.x_train, s.train.y(), &s.x_test, s.test.y())?;
    let opts = FitOptions::default();
    let sel = select_model(
        &s.x_train,
        s.train.y(),
        &orders(),
        &Task::Linear(LinearPriors::default()),
        &opts,
    )?;
    write_selection(&dir.join("selection.csv"), &sel)?;
    let winner = sel.winner();
    println!("selected order {}", winner.order);
    let (train, test) = poly_sets(&s.x_train, s.train.y(), &s.x_test, s.test.y(), winner.order)?;
    let CandidatePosterior::Linear(post) = &winner.posterior else {
        unreachable!("linear task yields linear posteriors")
    };
    let mut metrics = Vec::new();
    if cfg.baselines {
        let (tr, te) = poly_sets(&s.x_train, s.train.y(), &s.x_test, s.test.y(), BASELINE_ORDER)?;
        metrics.push(ml_metric(&tr, &te)?);
    }
    metrics.push(linear_metric(dir, "vb", post, &train, &test)?);
    Ok(metrics)
}

// raw scalar inputs x with target y, as used by the select command
fn save_raw(
    dir: &Path,
    x: &DVector<f64>,
    y: &DVector<f64>,
    x_test: &DVector<f64>,
    y_test: &DVector<f64>,
) -> Result<(), CliError> {
    let write = |name: &str, x: &DVector<f64>, y: &DVector<f64>| {
        let data = Dataset::new(
            DMatrix::from_column_slice(x.len(), 1, x.as_slice()),
            y.clone(),
            vec!["x".into()],
            "y",
        )?;
        save_dataset(&dir.join(name), &data)
    };
    write("train.csv", x, y)?;
    write("test.csv", x_test, y_test)?;
    Ok(())
}

fn poly_sets(
    x: &DVector<f64>,
    y: &DVector<f64>,
    x_test: &DVector<f64>,
    y_test: &DVector<f64>,
    order: usize,
) -> Result<(Dataset, Dataset), CliError> {
    let train = Dataset::from_xy(crate::select::polynomial_design(x, order)?, y.clone())?;
    let test = Dataset::from_xy(crate::select::polynomial_design(x_test, order)?, y_test.clone())?;
    Ok((train, test))
}

fn logit_metric(
    dir: &Path,
    method: &'static str,
    post: &LogitPosterior,
    train: &LabelDataset,
    test: &LabelDataset,
) -> Result<Metric, CliError> {
    let opts = FitOptions::default();
    PosteriorDocument::from_logit(post, &LogitPriors::default(), &opts, train.feature_names())
        .save(&dir.join(format!("posterior_{method}.json")))?;
    let on_train = predict_logit(post, train.x(), &opts)?;
    let on_test = predict_logit(post, test.x(), &opts)?;
    write_logit_predictions(&dir.join(format!("predictions_{method}.csv")), &on_test)?;
    Ok(Metric {
        method,
        train: zero_one(&on_train, train.y()),
        test: zero_one(&on_test, test.y()),
    })
}

fn fld_metric(train: &Dataset, test: &Dataset, intercept: bool) -> Result<Metric, CliError> {
    let fld = fisher_discriminant(train.x(), train.y(), intercept)
        .ok_or_else(|| CliError::Numerical("discriminant baseline failed".into()))?;
    Ok(Metric {
        method: "fld",
        train: zero_one_labels(&fld.classify(train.x()), train.y()),
        test: zero_one_labels(&fld.classify(test.x()), test.y()),
    })
}

fn logit_demo(
    cfg: &DemoConfig,
    train: &LabelDataset,
    test: &LabelDataset,
    ard: bool,
    intercept: bool,
) -> Result<Vec<Metric>, CliError> {
    let dir = &cfg.outdir;
    write_data(dir, train, test)?;
    let priors = LogitPriors::default();
    let opts = FitOptions::default();
    let mut metrics = Vec::new();
    if cfg.baselines {
        metrics.push(fld_metric(train, test, intercept)?);
    }
    let vb = fit_logit(train, &priors, &opts)?;
    metrics.push(logit_metric(dir, "vb", &vb, train, test)?);
    let iter = fit_logit_iter(train, &opts)?;
    metrics.push(logit_metric(dir, "vb-iter", &iter, train, test)?);
    if ard {
        let vb_ard = fit_logit_ard(train, &priors, &opts)?;
        metrics.push(logit_metric(dir, "vb-ard", &vb_ard, train, test)?);
    }
    Ok(metrics)
}

fn logit_modelsel(cfg: &DemoConfig) -> Result<Vec<Metric>, CliError> {
    let dir = &cfg.outdir;
    let s = gen_polynomial(
        cfg.seed,
        3,
        cfg.n.unwrap_or(50),
        cfg.n_test.unwrap_or(300),
        X_RANGE,
        0.0,
        PolyKind::Logit,
    )?;
    save_raw(dir, &s.x_train, s.train.y(), &s.x_test, s.test.y())?;
    let opts = FitOptions::default();
    let sel = select_model(
        &s.x_train,
        s.train.y(),
        &orders(),
        &Task::Logit(LogitPriors::default()),
        &opts,
    )?;
    write_selection(&dir.join("selection.csv"), &sel)?;
    let winner = sel.winner();
    println!("selected order {}", winner.order);
    let CandidatePosterior::Logit(post) = &winner.posterior else {
        unreachable!("logit task yields logit posteriors")
    };
    let (train, test) = poly_sets(&s.x_train, s.train.y(), &s.x_test, s.test.y(), winner.order)?;
    let mut metrics = Vec::new();
    if cfg.baselines {
        let (tr, te) = poly_sets(&s.x_train, s.train.y(), &s.x_test, s.test.y(), BASELINE_ORDER)?;
        metrics.push(fld_metric(&tr, &te, true)?);
    }
    let train = LabelDataset::try_from(train)?;
    let test = LabelDataset::try_from(test)?;
    metrics.push(logit_metric(dir, "vb", post, &train, &test)?);
    Ok(metrics)
}
