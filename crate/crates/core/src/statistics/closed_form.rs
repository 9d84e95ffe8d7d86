//! Closed forms for a linear ramp, used as benchmarks for the quadrature.
//!
//! All functions take `y = γτ` and return dimensionless quantities with
//! Ψ₀(0) = α = 1.

use std::f64::consts::PI;

use crate::special::{bessel_j0, bessel_j1, hyp_2f3, struve_h, SeriesControl, SpecialError};

const OVERDAMPED_SERIES_MAX: f64 = 0.1;
const BESSEL_SERIES_MAX: f64 = 2.0;

/// `βκ¹ = (y + e^{−y} − 1)/y²` for the overdamped model.
pub fn overdamped_linear_mean(y: f64) -> f64 {
    if y < OVERDAMPED_SERIES_MAX {
        // Σ (−y)^n / (n+2)!
        let mut term = 0.5;
        let mut sum = term;
        for n in 1..30 {
            term *= -y / f64::from(n + 2);
            sum += term;
        }
        sum
    } else {
        (y + (-y).exp_m1()) / (y * y)
    }
}

/// The Struve bracket `(π/(8y))(J₁(y)(−2 + πyH₀(y)) + yJ₀(y)(2 − πH₁(y)))`,
/// which tends to `π/8` as `y → 0`. Valid for `0 ≤ y ≤ 50`.
pub fn bessel_struve_bracket(y: f64) -> Result<f64, SpecialError> {
    if y < BESSEL_SERIES_MAX {
        return Ok(0.25 * PI * bessel_ramp_series(y));
    }
    let (j0, j1) = (bessel_j0(y), bessel_j1(y));
    let (h0, h1) = (struve_h(0, y)?, struve_h(1, y)?);
    Ok(PI / (8.0 * y) * (j1 * (-2.0 + PI * y * h0) + y * j0 * (2.0 - PI * h1)))
}

/// `(1/y²)∫₀^y (y−s) J₀(s) ds` as a power series.
fn bessel_ramp_series(y: f64) -> f64 {
    // Σ (−1)^m (y/2)^{2m} / ((m!)² (2m+1)(2m+2))
    let q = 0.25 * y * y;
    let mut pow = 1.0;
    let mut sum = 0.5;
    for m in 1..60u32 {
        let mf = f64::from(m);
        pow *= -q / (mf * mf);
        let term = pow / ((2.0 * mf + 1.0) * (2.0 * mf + 2.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `βκ¹` for the Bessel model: `(4/π)` times the Struve bracket.
pub fn bessel_linear_mean(y: f64) -> Result<f64, SpecialError> {
    Ok(4.0 / PI * bessel_struve_bracket(y)?)
}

/// `₂F₃(1, 1; 3/2, 3/2, 2; −y²/4)`.
pub fn bessel_zero_point_series(y: f64) -> Result<f64, SpecialError> {
    hyp_2f3(
        [1.0, 1.0],
        [1.5, 1.5, 2.0],
        -0.25 * y * y,
        SeriesControl::default(),
    )
}

/// Mean pseudo-mode frequency of the Bessel model in units of γ.
pub fn bessel_mean_frequency(y: f64) -> Result<f64, SpecialError> {
    if y > crate::special::STRUVE_MAX_ARG {
        return Err(SpecialError::OutOfRange {
            function: "bessel_mean_frequency",
            x: y,
            min: 0.0,
            max: crate::special::STRUVE_MAX_ARG,
        });
    }
    Ok(bessel_zero_point_series(y)? / (4.0 * bessel_struve_bracket(y)?))
}
