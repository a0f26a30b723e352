//! Seeded generators for the demo experiments.
//!
//! Every generator is a pure function of its seed and parameters. The stream
//! is ChaCha20 (counter based, 2^64 blocks per seed); uniforms are
//! `[0, 1)` doubles and standard normals use the ziggurat sampler of
//! `rand_distr`. Draw order follows the data construction: coefficients,
//! training inputs, test inputs, training noise/labels, test noise/labels.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{DataError, Dataset, LabelDataset};
use crate::numerics::sigmoid;

pub type Seed = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLinear {
    pub w_true: DVector<f64>,
    pub train: Dataset,
    pub test: Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLogit {
    pub w_true: DVector<f64>,
    pub train: LabelDataset,
    pub test: LabelDataset,
}

/// Polynomial data: the raw scalar inputs plus their power design matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPolynomial {
    pub w_true: DVector<f64>,
    pub x_train: DVector<f64>,
    pub x_test: DVector<f64>,
    pub train: Dataset,
    pub test: Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyKind {
    Linear,
    Logit,
}

fn rng(seed: Seed) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn normals(rng: &mut ChaCha20Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

// MATLAB-style rand(rows, cols) - 0.5, filled column-major
fn centered_uniform(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() - 0.5)
}

fn labels(rng: &mut ChaCha20Rng, logits: &DVector<f64>) -> DVector<f64> {
    logits.map(|z| if rng.random::<f64>() < sigmoid(z) { 1.0 } else { -1.0 })
}

fn require(cond: bool, what: &str) -> Result<(), DataError> {
    if cond {
        Ok(())
    } else {
        Err(DataError::InvalidParameter(what.to_owned()))
    }
}

fn sparse_weights(rng: &mut ChaCha20Rng, d: usize, d_eff: usize) -> DVector<f64> {
    let informative = normals(rng, d_eff);
    DVector::from_fn(d, |i, _| if i < d_eff { informative[i] } else { 0.0 })
}

/// Intercept plus three standard-normal regressors, y = X·(1, 2, 3, 5) + noise.
pub fn gen_linear_coeff(seed: Seed, n: usize, n_test: usize) -> Result<SyntheticLinear, DataError> {
    require(n >= 1 && n_test >= 1, "n and n_test must be at least 1")?;
    let mut rng = rng(seed);
    let w_true = DVector::from_vec(vec![1.0, 2.0, 3.0, 5.0]);
    let design = |rng: &mut ChaCha20Rng, rows: usize| {
        let z = DMatrix::from_fn(rows, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        DMatrix::from_fn(rows, 4, |r, c| if c == 0 { 1.0 } else { z[(r, c - 1)] })
    };
    let x = design(&mut rng, n);
    let x_test = design(&mut rng, n_test);
    let y = &x * &w_true + normals(&mut rng, n);
    let y_test = &x_test * &w_true + normals(&mut rng, n_test);
    Ok(SyntheticLinear {
        w_true,
        train: Dataset::from_xy(x, y)?,
        test: Dataset::from_xy(x_test, y_test)?,
    })
}

/// `d_eff` standard-normal coefficients followed by `d − d_eff` exact zeros,
/// inputs uniform on [−0.5, 0.5], Gaussian noise with standard deviation `noise_sd`.
pub fn gen_linear_sparse(
    seed: Seed,
    d: usize,
    d_eff: usize,
    n: usize,
    n_test: usize,
    noise_sd: f64,
) -> Result<SyntheticLinear, DataError> {
    require(d_eff >= 1 && d_eff <= d, "need 1 <= d_eff <= d")?;
    require(n >= 1 && n_test >= 1, "n and n_test must be at least 1")?;
    require(noise_sd.is_finite() && noise_sd >= 0.0, "noise_sd must be finite and >= 0")?;
    let mut rng = rng(seed);
    let w_true = sparse_weights(&mut rng, d, d_eff);
    let x = centered_uniform(&mut rng, n, d);
    let x_test = centered_uniform(&mut rng, n_test, d);
    let y = &x * &w_true + normals(&mut rng, n) * noise_sd;
    let y_test = &x_test * &w_true + normals(&mut rng, n_test) * noise_sd;
    Ok(SyntheticLinear {
        w_true,
        train: Dataset::from_xy(x, y)?,
        test: Dataset::from_xy(x_test, y_test)?,
    })
}

/// Polynomial regression / classification data with `k` power columns.
///
/// Training inputs are uniform on `x_range`; test inputs are `n_test` evenly
/// spaced points across it. The linear kind adds noise to training targets
/// only (test targets are the noise-free polynomial); the logit kind draws
/// ±1 labels with probability σ(X·w) for both sets.
#[allow(clippy::too_many_arguments)]
pub fn gen_polynomial(
    seed: Seed,
    k: usize,
    n: usize,
    n_test: usize,
    x_range: (f64, f64),
    noise_sd: f64,
    kind: PolyKind,
) -> Result<SyntheticPolynomial, DataError> {
    require(k >= 1, "k must be at least 1")?;
    require(n >= 1 && n_test >= 1, "n and n_test must be at least 1")?;
    let (lo, hi) = x_range;
    require(lo.is_finite() && hi.is_finite() && lo < hi, "x_range must be finite and increasing")?;
    require(noise_sd.is_finite() && noise_sd >= 0.0, "noise_sd must be finite and >= 0")?;
    let mut rng = rng(seed);
    let w_true = normals(&mut rng, k);
    let x_train = DVector::from_fn(n, |_, _| lo + (hi - lo) * rng.random::<f64>());
    let x_test = if n_test == 1 {
        DVector::from_element(1, lo)
    } else {
        let step = (hi - lo) / (n_test - 1) as f64;
        DVector::from_fn(n_test, |i, _| if i + 1 == n_test { hi } else { lo + step * i as f64 })
    };
    let design = crate::select::polynomial_design(&x_train, k)
        .map_err(|e| DataError::InvalidParameter(e.to_string()))?;
    let design_test = crate::select::polynomial_design(&x_test, k)
        .map_err(|e| DataError::InvalidParameter(e.to_string()))?;
    let (y, y_test) = match kind {
        PolyKind::Linear => (
            &design * &w_true + normals(&mut rng, n) * noise_sd,
            &design_test * &w_true,
        ),
        PolyKind::Logit => {
            let y = labels(&mut rng, &(&design * &w_true));
            let y_test = labels(&mut rng, &(&design_test * &w_true));
            (y, y_test)
        }
    };
    Ok(SyntheticPolynomial {
        w_true,
        x_train,
        x_test,
        train: Dataset::from_xy(design, y)?,
        test: Dataset::from_xy(design_test, y_test)?,
    })
}

/// Three-feature classification data whose separating plane splits the inputs
/// roughly in half: x₁ = 1, x₂ uniform on ±scale/2 and x₃ shifted so that
/// w₁ + x₂w₂ + x₃w₃ is symmetric about zero.
pub fn gen_logit_plane(
    seed: Seed,
    n: usize,
    n_test: usize,
    x_scale: f64,
) -> Result<SyntheticLogit, DataError> {
    require(n >= 1 && n_test >= 1, "n and n_test must be at least 1")?;
    require(x_scale.is_finite() && x_scale > 0.0, "x_scale must be positive")?;
    let mut rng = rng(seed);
    let w_true = normals(&mut rng, 3);
    let design = |rng: &mut ChaCha20Rng, rows: usize| {
        let x2 = DVector::from_fn(rows, |_, _| x_scale * (rng.random::<f64>() - 0.5));
        let x3 = DVector::from_fn(rows, |r, _| {
            x_scale * (rng.random::<f64>() - 0.5) - (w_true[0] + x2[r] * w_true[1]) / w_true[2]
        });
        DMatrix::from_fn(rows, 3, |r, c| match c {
            0 => 1.0,
            1 => x2[r],
            _ => x3[r],
        })
    };
    let x = design(&mut rng, n);
    let x_test = design(&mut rng, n_test);
    let y = labels(&mut rng, &(&x * &w_true));
    let y_test = labels(&mut rng, &(&x_test * &w_true));
    Ok(SyntheticLogit {
        train: LabelDataset::try_from(Dataset::from_xy(x, y)?)?,
        test: LabelDataset::try_from(Dataset::from_xy(x_test, y_test)?)?,
        w_true,
    })
}

/// Sparse classification data: as [`gen_linear_sparse`] with labels drawn
/// from σ(X·w) instead of additive noise.
pub fn gen_logit_sparse(
    seed: Seed,
    d: usize,
    d_eff: usize,
    n: usize,
    n_test: usize,
) -> Result<SyntheticLogit, DataError> {
    require(d_eff >= 1 && d_eff <= d, "need 1 <= d_eff <= d")?;
    require(n >= 1 && n_test >= 1, "n and n_test must be at least 1")?;
    let mut rng = rng(seed);
    let w_true = sparse_weights(&mut rng, d, d_eff);
    let x = centered_uniform(&mut rng, n, d);
    let x_test = centered_uniform(&mut rng, n_test, d);
    let y = labels(&mut rng, &(&x * &w_true));
    let y_test = labels(&mut rng, &(&x_test * &w_true));
    Ok(SyntheticLogit {
        w_true,
        train: LabelDataset::try_from(Dataset::from_xy(x, y)?)?,
        test: LabelDataset::try_from(Dataset::from_xy(x_test, y_test)?)?,
    })
}
