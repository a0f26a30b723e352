//! Dense symmetric-positive-definite linear algebra: Cholesky with a jitter
//! fallback, solves, log-determinants and rank-one inverse updates.

use nalgebra::{DMatrix, DVector};

use super::NumericsError;

/// Relative diagonal jitter tried, in order, when a plain factorization fails.
const JITTER_STEPS: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
    /// Diagonal jitter added before the factorization succeeded (0 if none).
    jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, NumericsError> {
        if b.len() != self.dim() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.dim(),
                found: b.len(),
            });
        }
        let mut x = b.clone();
        self.forward(x.as_mut_slice());
        self.backward(x.as_mut_slice());
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
        if b.nrows() != self.dim() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.dim(),
                found: b.nrows(),
            });
        }
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            let s = col.as_mut_slice();
            self.forward(s);
            self.backward(s);
        }
        Ok(x)
    }

    /// ln det(A) = 2 Σ ln L_ii.
    pub fn logdet(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// A⁻¹, symmetrized.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        // L⁻¹ by forward substitution on the identity, then A⁻¹ = L⁻ᵀ L⁻¹
        let mut linv = DMatrix::<f64>::identity(n, n);
        for mut col in linv.column_iter_mut() {
            self.forward(col.as_mut_slice());
        }
        let mut inv = linv.tr_mul(&linv);
        symmetrize(&mut inv);
        inv
    }

    // L y = b, in place
    fn forward(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    // Lᵀ x = y, in place
    fn backward(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// If a pivot is not strictly positive, `ε·(tr A / n)·I` is added with ε
/// escalating through 1e-10, 1e-8, 1e-6. The error names the failing pivot
/// (1-based) of the last attempt.
pub fn chol(a: &DMatrix<f64>) -> Result<CholeskyFactor, NumericsError> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(NumericsError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(NumericsError::NotSymmetric { row: i, col: j });
            }
        }
    }

    let mut pivot = match factor_lower(a) {
        Ok(l) => return Ok(CholeskyFactor { l, jitter: 0.0 }),
        Err(p) => p,
    };
    let mean_diag = a.trace() / n as f64;
    for eps in JITTER_STEPS {
        let jitter = eps * mean_diag.abs().max(f64::MIN_POSITIVE);
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        match factor_lower(&shifted) {
            Ok(l) => return Ok(CholeskyFactor { l, jitter }),
            Err(p) => pivot = p,
        }
    }
    Err(NumericsError::NotPositiveDefinite { pivot })
}

// Reads only the lower triangle. On failure returns the 1-based pivot index.
fn factor_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j + 1);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` given the factor of `A`.
pub fn spd_solve(f: &CholeskyFactor, b: &DVector<f64>) -> Result<DVector<f64>, NumericsError> {
    f.solve(b)
}

/// ln det(L Lᵀ).
pub fn spd_logdet(f: &CholeskyFactor) -> f64 {
    f.logdet()
}

/// Returns (V⁻¹ + c x xᵀ)⁻¹ given V, by the Sherman–Morrison formula.
pub fn rank1_inv_update(
    v: &DMatrix<f64>,
    x: &DVector<f64>,
    c: f64,
) -> Result<DMatrix<f64>, NumericsError> {
    check_rank1(v, x, c)?;
    if c == 0.0 {
        return Ok(v.clone());
    }
    let vx = v * x;
    let denom = 1.0 + c * x.dot(&vx);
    if !(denom > 0.0) {
        return Err(NumericsError::NotPositiveDefinite { pivot: 0 });
    }
    let k = c / denom;
    let n = v.nrows();
    let mut out = v.clone();
    // the product u_i u_j is formed first so the update is exactly symmetric
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] -= k * (vx[i] * vx[j]);
        }
    }
    Ok(out)
}

/// ln|V_new| = ln|V| − ln(1 + c xᵀ V x) for V_new = (V⁻¹ + c x xᵀ)⁻¹.
pub fn rank1_logdet_update(
    logdet_v: f64,
    v: &DMatrix<f64>,
    x: &DVector<f64>,
    c: f64,
) -> Result<f64, NumericsError> {
    check_rank1(v, x, c)?;
    if c == 0.0 {
        return Ok(logdet_v);
    }
    let q = x.dot(&(v * x));
    let arg = c * q;
    if !(1.0 + arg > 0.0) {
        return Err(NumericsError::NotPositiveDefinite { pivot: 0 });
    }
    Ok(logdet_v - arg.ln_1p())
}

fn check_rank1(v: &DMatrix<f64>, x: &DVector<f64>, c: f64) -> Result<(), NumericsError> {
    if v.nrows() != v.ncols() {
        return Err(NumericsError::NotSquare {
            rows: v.nrows(),
            cols: v.ncols(),
        });
    }
    if x.len() != v.nrows() {
        return Err(NumericsError::DimensionMismatch {
            expected: v.nrows(),
            found: x.len(),
        });
    }
    if !c.is_finite() || c < 0.0 || x.iter().any(|e| !e.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    Ok(())
}

/// Copies the lower triangle onto the upper one.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
}

/// Σ_n w_n x_n x_nᵀ over the rows of `x`, exactly symmetric.
pub fn weighted_gram(x: &DMatrix<f64>, weights: Option<&DVector<f64>>) -> DMatrix<f64> {
    let mut g = match weights {
        None => x.tr_mul(x),
        Some(w) => {
            let mut scaled = x.clone();
            for (mut row, wn) in scaled.row_iter_mut().zip(w.iter()) {
                row *= *wn;
            }
            x.tr_mul(&scaled)
        }
    };
    symmetrize(&mut g);
    g
}

/// (x_nᵀ M x_n)_n for every row of `x`.
pub fn row_quadratic_forms(x: &DMatrix<f64>, m: &DMatrix<f64>) -> DVector<f64> {
    let xm = x * m;
    DVector::from_iterator(
        x.nrows(),
        xm.row_iter().zip(x.row_iter()).map(|(a, b)| a.dot(&b)),
    )
}
