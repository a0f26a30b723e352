//! Reference estimators the demos compare against.

use nalgebra::{DMatrix, DVector};

fn pinv_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.nrows().max(a.ncols()) as f64;
    let svd = a.svd(true, true);
    let top = svd.singular_values.max();
    svd.solve(b, scale * top * f64::EPSILON).ok()
}

/// Minimum-norm least-squares coefficients (maximum likelihood under Gaussian noise).
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    pinv_solve(x.clone(), y)
}

/// Fisher's linear discriminant: predicts +1 where xᵀw > threshold.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Discriminant {
    pub w: DVector<f64>,
    pub threshold: f64,
}

impl Discriminant {
    pub fn classify(&self, x: &DMatrix<f64>) -> DVector<f64> {
        (x * &self.w).map(|z| if z > self.threshold { 1.0 } else { -1.0 })
    }
}

fn mean_and_scatter(x: &DMatrix<f64>, rows: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let d = x.ncols();
    let n = rows.len() as f64;
    let mut mean = DVector::zeros(d);
    for &r in rows {
        mean += x.row(r).transpose();
    }
    mean /= n;
    let mut centered = DMatrix::zeros(rows.len(), d);
    for (i, &r) in rows.iter().enumerate() {
        centered.set_row(i, &(x.row(r) - mean.transpose()));
    }
    // unbiased covariance
    let cov = centered.tr_mul(&centered) / (n - 1.0).max(1.0);
    (mean, cov)
}

/// Fisher's discriminant with the class boundary halfway between the projected
/// class means. With `intercept`, column 0 is a constant that is left out of
/// the covariance and absorbs the threshold.
pub(crate) fn fisher_discriminant(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    intercept: bool,
) -> Option<Discriminant> {
    let pos: Vec<usize> = (0..y.len()).filter(|&r| y[r] > 0.0).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&r| y[r] <= 0.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let first = usize::from(intercept);
    let features = x.columns(first, x.ncols() - first).into_owned();
    if features.ncols() == 0 {
        return None;
    }
    let (m1, c1) = mean_and_scatter(&features, &pos);
    let (m0, c0) = mean_and_scatter(&features, &neg);
    let w = pinv_solve(c1 + c0, &(&m1 - &m0))?;
    let threshold = 0.5 * (&m1 + &m0).dot(&w);
    if intercept {
        let mut full = DVector::zeros(x.ncols());
        full[0] = -threshold;
        full.rows_mut(1, w.len()).copy_from(&w);
        Some(Discriminant { w: full, threshold: 0.0 })
    } else {
        Some(Discriminant { w, threshold })
    }
}
