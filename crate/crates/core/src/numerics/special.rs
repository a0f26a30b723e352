//! Gamma-family special functions and the logistic sigmoid helpers.
//!
//! `log_gamma` and `digamma` shift their argument upward with the
//! recurrence Γ(x+1) = xΓ(x) until it reaches the asymptotic regime
//! (x ≥ 8) and then sum the Stirling / de Moivre series.

use super::NumericsError;

const ASYMPTOTIC_FROM: f64 = 8.0;

/// ½ ln(2π)
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)), k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k), k = 1..7
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

fn check_domain(func: &'static str, x: f64) -> Result<(), NumericsError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(NumericsError::Domain { func, x })
    }
}

/// Natural logarithm of the gamma function for positive finite `x`.
pub fn log_gamma(x: f64) -> Result<f64, NumericsError> {
    check_domain("log_gamma", x)?;
    let mut z = x;
    let mut shift = 1.0;
    while z < ASYMPTOTIC_FROM {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Horner over 1/z^2, innermost term first
    let mut series = 0.0;
    for c in STIRLING.iter().rev() {
        series = series * inv2 + c;
    }
    let asymptotic = (z - 0.5) * z.ln() - z + HALF_LN_2PI + series * inv;
    Ok(asymptotic - shift.ln())
}

/// Digamma function ψ(x) = d/dx ln Γ(x) for positive finite `x`.
pub fn digamma(x: f64) -> Result<f64, NumericsError> {
    check_domain("digamma", x)?;
    let mut z = x;
    let mut acc = 0.0;
    while z < ASYMPTOTIC_FROM {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    for c in DIGAMMA_SERIES.iter().rev() {
        series = series * inv2 + c;
    }
    Ok(acc + z.ln() - 0.5 / z - series * inv2)
}

/// Logistic sigmoid 1 / (1 + e^{-z}); never exponentiates a positive argument.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln σ(z), accurate in both tails.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Curvature coefficient λ(ξ) = (σ(ξ) − ½) / (2ξ) of the quadratic sigmoid bound.
///
/// Even in ξ. The removable singularity at zero is handled with the
/// series 1/8 − ξ²/96 + ξ⁴/960 for |ξ| < 1e-4.
pub fn lambda_xi(xi: f64) -> f64 {
    let a = xi.abs();
    if a < 1e-4 {
        let x2 = a * a;
        0.125 - x2 / 96.0 + x2 * x2 / 960.0
    } else {
        // σ(a) − ½ = ½ tanh(a/2), without cancellation for small a
        0.25 * (0.5 * a).tanh() / a
    }
}

/// ln σ(ξ) − ξ/2 + λ(ξ)ξ², the ξ-only part of the quadratic sigmoid bound.
pub fn bound_offset(xi: f64) -> f64 {
    log_sigmoid(xi) - 0.5 * xi + lambda_xi(xi) * xi * xi
}

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;
