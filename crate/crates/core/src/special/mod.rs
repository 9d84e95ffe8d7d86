//! Bessel, Struve and hypergeometric functions needed by the closed-form
//! benchmarks, plus the `coth(x/2)` family used by the cumulant weights.
//!
//! The alternating power series are summed in double-double arithmetic:
//! the Struve and ₂F₃ series lose up to twenty digits to cancellation near
//! the top of their validated ranges.

mod dd;

use dd::Dd;
use thiserror::Error;

/// Largest argument for which the Struve series is validated.
pub const STRUVE_MAX_ARG: f64 = 50.0;

/// Below this |x| the Bessel functions use the power series; above it the
/// Hankel asymptotic expansion is already accurate to well below 1e-13.
const BESSEL_SERIES_MAX_ARG: f64 = 25.0;

/// Crossover below which `coth(x/2)` and `x coth(x/2)` use their Laurent series.
const COTH_SERIES_MAX_ARG: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("{function}: order {order} not supported (only 0 and 1)")]
    UnsupportedOrder { function: &'static str, order: u32 },
    #[error("{function}: argument {x} outside validated range [{min}, {max}]")]
    OutOfRange {
        function: &'static str,
        x: f64,
        min: f64,
        max: f64,
    },
    #[error("{function}: series did not converge within {terms} terms")]
    NoConvergence { function: &'static str, terms: usize },
    #[error("{function}: invalid parameter: {reason}")]
    InvalidParameter {
        function: &'static str,
        reason: String,
    },
}

/// Truncation control for the hypergeometric series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms: 2000,
            rel_tol: 1e-20,
        }
    }
}

impl SeriesControl {
    pub fn new(max_terms: usize, rel_tol: f64) -> Result<Self, SpecialError> {
        if max_terms < 1 || !(rel_tol > 0.0) {
            return Err(SpecialError::InvalidParameter {
                function: "SeriesControl",
                reason: format!("need max_terms >= 1 and rel_tol > 0, got {max_terms}, {rel_tol}"),
            });
        }
        Ok(SeriesControl { max_terms, rel_tol })
    }
}

/// Bessel function of the first kind `J_n(x)` for `n ∈ {0, 1}`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64, SpecialError> {
    match n {
        0 => Ok(bessel_j0(x)),
        1 => Ok(bessel_j1(x)),
        _ => Err(SpecialError::UnsupportedOrder {
            function: "bessel_j",
            order: n,
        }),
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= BESSEL_SERIES_MAX_ARG {
        bessel_series(0, ax)
    } else {
        bessel_asymptotic(0, ax)
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= BESSEL_SERIES_MAX_ARG {
        bessel_series(1, ax)
    } else {
        bessel_asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `Σ_k (-1)^k (x/2)^{2k+n} / (k! (k+n)!)`, x ≥ 0.
fn bessel_series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = Dd::from_f64(0.5 * x);
    let q = half * half;
    let mut term = if n == 0 { Dd::from_f64(1.0) } else { half };
    let mut sum = term;
    let nf = f64::from(n);
    for k in 0..400 {
        let kf = k as f64;
        term = -(term * q).div_f64((kf + 1.0) * (kf + 1.0 + nf));
        sum = sum + term;
        if kf > 0.5 * x && term.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) {
            break;
        }
    }
    sum.to_f64()
}

/// Hankel expansion `sqrt(2/(πx)) (P cos χ − Q sin χ)`, χ = x − (2n+1)π/4.
fn bessel_asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(n * n);
    let mut p = 0.0;
    let mut q = 0.0;
    // a_k = Π_{j≤k} (μ − (2j−1)²) / (k! 8^k), alternately feeding P and Q
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let t = a / x.powi(k);
        if t.abs() > last {
            break;
        }
        last = t.abs();
        match k % 4 {
            0 => p += t,
            1 => q += t,
            2 => p -= t,
            _ => q -= t,
        }
        if t.abs() < 1e-17 {
            break;
        }
        let j = f64::from(k as u32 + 1);
        a *= (mu - (2.0 * j - 1.0).powi(2)) / (j * 8.0);
    }
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (cos_chi, sin_chi) = if n == 0 {
        ((c + s) * r, (s - c) * r)
    } else {
        ((s - c) * r, -(s + c) * r)
    };
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Struve function `H_n(x)` for `n ∈ {0, 1}` and `0 ≤ x ≤ 50`.
pub fn struve_h(n: u32, x: f64) -> Result<f64, SpecialError> {
    if n > 1 {
        return Err(SpecialError::UnsupportedOrder {
            function: "struve_h",
            order: n,
        });
    }
    if !(0.0..=STRUVE_MAX_ARG).contains(&x) {
        return Err(SpecialError::OutOfRange {
            function: "struve_h",
            x,
            min: 0.0,
            max: STRUVE_MAX_ARG,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let half = Dd::from_f64(0.5 * x);
    let q = half * half;
    // k = 0 term: (x/2)^{n+1} / (Γ(3/2) Γ(n + 3/2)); Γ(3/2)² = π/4, Γ(3/2)Γ(5/2) = 3π/8
    let mut term = if n == 0 {
        half.mul_f64(4.0).div(dd::PI)
    } else {
        q.mul_f64(8.0).div(dd::PI.mul_f64(3.0))
    };
    let mut sum = term;
    let nf = f64::from(n);
    for k in 0..600 {
        let kf = k as f64;
        term = -(term * q).div_f64((kf + 1.5) * (kf + nf + 1.5));
        sum = sum + term;
        if kf > 0.5 * x && term.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) {
            return Ok(sum.to_f64());
        }
    }
    Err(SpecialError::NoConvergence {
        function: "struve_h",
        terms: 600,
    })
}

/// Generalised hypergeometric `₂F₃(a1, a2; b1, b2, b3; z)` by direct series.
///
/// The series is entire; cancellation for large negative `z` is absorbed by
/// the double-double accumulator.
pub fn hyp_2f3(
    a: [f64; 2],
    b: [f64; 3],
    z: f64,
    control: SeriesControl,
) -> Result<f64, SpecialError> {
    for &bj in &b {
        if bj <= 0.0 && bj.fract() == 0.0 {
            return Err(SpecialError::InvalidParameter {
                function: "hyp_2f3",
                reason: format!("lower parameter {bj} is a non-positive integer"),
            });
        }
    }
    if !z.is_finite() {
        return Err(SpecialError::InvalidParameter {
            function: "hyp_2f3",
            reason: format!("non-finite argument {z}"),
        });
    }
    let mut term = Dd::from_f64(1.0);
    let mut sum = term;
    let mut prev_abs = f64::INFINITY;
    for k in 0..control.max_terms {
        let kf = k as f64;
        let num = (a[0] + kf) * (a[1] + kf);
        let den = (b[0] + kf) * (b[1] + kf) * (b[2] + kf) * (kf + 1.0);
        term = term.mul_f64(z).mul_f64(num).div_f64(den);
        if term.hi == 0.0 {
            return Ok(sum.to_f64());
        }
        sum = sum + term;
        let t = term.hi.abs();
        let decreasing = t < prev_abs;
        prev_abs = t;
        if decreasing && t <= control.rel_tol * sum.abs().hi {
            return Ok(sum.to_f64());
        }
    }
    Err(SpecialError::NoConvergence {
        function: "hyp_2f3",
        terms: control.max_terms,
    })
}

/// Partial sums of the ₂F₃ series, first `count` of them (index 0 is the
/// constant term). Used to check bracketing of the alternating series.
pub fn hyp_2f3_partial_sums(a: [f64; 2], b: [f64; 3], z: f64, count: usize) -> Vec<f64> {
    let mut term = Dd::from_f64(1.0);
    let mut sum = term;
    let mut out = Vec::with_capacity(count);
    out.push(sum.to_f64());
    for k in 0..count.saturating_sub(1) {
        let kf = k as f64;
        let num = (a[0] + kf) * (a[1] + kf);
        let den = (b[0] + kf) * (b[1] + kf) * (b[2] + kf) * (kf + 1.0);
        term = term.mul_f64(z).mul_f64(num).div_f64(den);
        sum = sum + term;
        out.push(sum.to_f64());
    }
    out
}

/// `coth(x/2)`.
pub fn coth_half(x: f64) -> f64 {
    if x.abs() < COTH_SERIES_MAX_ARG {
        // 2/x + x/6 − x³/360
        2.0 / x + x / 6.0 - x * x * x / 360.0
    } else {
        1.0 / (0.5 * x).tanh()
    }
}

/// `x · coth(x/2)`, finite and even with value 2 at the origin.
pub fn x_coth_half(x: f64) -> f64 {
    if x.abs() < COTH_SERIES_MAX_ARG {
        2.0 + x * x / 6.0
    } else {
        x / (0.5 * x).tanh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Bessel's integrals, trapezoid rule (spectrally accurate for periodic integrands):
    //   J0(x) = (1/π)∫₀^π cos(x sin θ) dθ,  J1(x) = (1/π)∫₀^π cos(θ − x sin θ) dθ
    fn trapezoid_pi(f: impl Fn(f64) -> f64) -> f64 {
        let n = 400;
        let h = std::f64::consts::PI / n as f64;
        let mut s = 0.5 * (f(0.0) + f(std::f64::consts::PI));
        for k in 1..n {
            s += f(k as f64 * h);
        }
        s * h / std::f64::consts::PI
    }

    fn j0_by_integral(x: f64) -> f64 {
        trapezoid_pi(|t| (x * t.sin()).cos())
    }

    fn j1_by_integral(x: f64) -> f64 {
        trapezoid_pi(|t| (t - x * t.sin()).cos())
    }

    #[test]
    fn bessel_values_at_origin() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
    }

    #[test]
    fn j0_at_one() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    }

    #[test]
    fn bessel_matches_integral_representation() {
        let mut x = -40.0;
        while x <= 60.0 {
            assert!((bessel_j0(x) - j0_by_integral(x)).abs() < 1e-12, "J0({x})");
            assert!((bessel_j1(x) - j1_by_integral(x)).abs() < 1e-12, "J1({x})");
            x += 0.37;
        }
    }

    #[test]
    fn bessel_branches_agree_at_switch() {
        for &x in &[BESSEL_SERIES_MAX_ARG, 20.0, 30.0] {
            assert!((bessel_series(0, x) - bessel_asymptotic(0, x)).abs() < 1e-14, "J0({x})");
            assert!((bessel_series(1, x) - bessel_asymptotic(1, x)).abs() < 1e-14, "J1({x})");
        }
    }

    #[test]
    fn j0_derivative_is_minus_j1() {
        let h = 1e-5;
        for i in 0..80 {
            let x = 0.3 + 0.5 * i as f64;
            let d = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            assert!((d + bessel_j1(x)).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        // bisection on the series itself
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if bessel_j0(a) * bessel_j0(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        assert!((a - 2.404_825_557_695_773).abs() < 1e-13);
    }

    #[test]
    fn unsupported_orders() {
        assert!(matches!(bessel_j(2, 1.0), Err(SpecialError::UnsupportedOrder { .. })));
        assert!(matches!(struve_h(3, 1.0), Err(SpecialError::UnsupportedOrder { .. })));
    }

    #[test]
    fn struve_small_arguments() {
        assert_eq!(struve_h(0, 0.0).unwrap(), 0.0);
        assert_eq!(struve_h(1, 0.0).unwrap(), 0.0);
        let x = 1e-4;
        let h0 = struve_h(0, x).unwrap();
        assert!((h0 - 2.0 * x / std::f64::consts::PI).abs() < 1e-12);
        assert!((h0 - 6.3662e-5).abs() < 1e-9);
    }

    // H0(x) = (2/π)∫₀^{π/2} sin(x cos θ) dθ
    fn h0_by_integral(x: f64) -> f64 {
        // Gauss–Legendre on sub-panels; integrand is smooth and bounded
        let panels = 200;
        let h = std::f64::consts::FRAC_PI_2 / panels as f64;
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let mut s = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(t, w) in &nodes {
                let th = mid + 0.5 * h * t;
                s += w * 0.5 * h * (x * th.cos()).sin();
            }
        }
        2.0 / std::f64::consts::PI * s
    }

    #[test]
    fn struve_h0_matches_integral() {
        for i in 0..=100 {
            let x = 0.5 * i as f64;
            let v = struve_h(0, x).unwrap();
            assert!((v - h0_by_integral(x)).abs() < 1e-10, "H0({x}) = {v}");
        }
    }

    #[test]
    fn struve_h1_from_derivative_identity() {
        // H0'(x) = 2/π − H1(x)
        let h = 1e-5;
        for i in 1..100 {
            let x = 0.5 * i as f64;
            let d = (struve_h(0, x + h).unwrap() - struve_h(0, x - h).unwrap()) / (2.0 * h);
            let h1 = struve_h(1, x).unwrap();
            assert!((d - (2.0 / std::f64::consts::PI - h1)).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn struve_range_error() {
        assert!(matches!(struve_h(0, 50.5), Err(SpecialError::OutOfRange { .. })));
        assert!(matches!(struve_h(0, -1.0), Err(SpecialError::OutOfRange { .. })));
    }

    const A: [f64; 2] = [1.0, 1.0];
    const B: [f64; 3] = [1.5, 1.5, 2.0];

    #[test]
    fn hyp_2f3_at_zero() {
        assert_eq!(hyp_2f3(A, B, 0.0, SeriesControl::default()).unwrap(), 1.0);
    }

    #[test]
    fn hyp_2f3_rejects_pole_parameters() {
        let r = hyp_2f3(A, [1.5, -2.0, 2.0], -1.0, SeriesControl::default());
        assert!(matches!(r, Err(SpecialError::InvalidParameter { .. })));
    }

    #[test]
    fn hyp_2f3_reports_nonconvergence() {
        let ctl = SeriesControl::new(3, 1e-20).unwrap();
        let r = hyp_2f3(A, B, -100.0, ctl);
        assert!(matches!(r, Err(SpecialError::NoConvergence { .. })));
    }

    #[test]
    fn series_control_validation() {
        assert!(SeriesControl::new(0, 1e-10).is_err());
        assert!(SeriesControl::new(10, 0.0).is_err());
    }

    #[test]
    fn hyp_2f3_partial_sums_bracket_limit() {
        for &z in &[-1.0, -25.0, -100.0] {
            let limit = hyp_2f3(A, B, z, SeriesControl::default()).unwrap();
            let sums = hyp_2f3_partial_sums(A, B, z, 200);
            // once the terms decrease, consecutive partial sums straddle the limit
            let start = (z.abs().sqrt() as usize) + 2;
            for w in sums[start..].windows(2) {
                let (lo, hi) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
                assert!(lo - 1e-15 <= limit && limit <= hi + 1e-15, "z = {z}");
            }
        }
    }

    #[test]
    fn coth_half_values() {
        assert!((coth_half(2.0) - 1.313_035_285_499_331_2).abs() < 1e-15);
        assert!((coth_half(100.0) - 1.0).abs() < 1e-15);
        let x = 1e-8;
        assert!((coth_half(x) * x / 2.0 - 1.0).abs() < 1e-15);
        assert!((coth_half(x) - (2e8 + x / 6.0)).abs() < 1e-6);
    }

    #[test]
    fn x_coth_half_is_continuous_at_switch() {
        let lo = x_coth_half(COTH_SERIES_MAX_ARG * (1.0 - 1e-9));
        let hi = x_coth_half(COTH_SERIES_MAX_ARG * (1.0 + 1e-9));
        assert!((lo - hi).abs() < 1e-14);
        assert_eq!(x_coth_half(0.0), 2.0);
        assert_eq!(x_coth_half(-3.0), x_coth_half(3.0));
    }
}
