use num_complex::Complex64;
use serde::Serialize;

use super::{GibbsState, OracleError, QuantumSystem};
use crate::protocol::DrivingProtocol;
use crate::quadrature::{integrate_triangle, QuadSpec};
use crate::statistics::ThermalParams;

const LOG_RATIO_SERIES_MAX: f64 = 1e-6;

/// One Bohr-frequency term `(n, m)` of the spectral sums, in the H₀
/// eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralComponent {
    pub n: usize,
    pub m: usize,
    /// `(ε_n − ε_m)/ħ`.
    pub omega: f64,
    /// `β² c_nm |δV_nm|²`: weight in Ψ₀.
    pub relaxation: f64,
    /// `p_m f_η(p_n/p_m) |δV_nm|²`: weight in the generalised covariance.
    pub covariance: f64,
    /// `ln(p_n/p_m)`.
    pub log_ratio: f64,
    pub p_m: f64,
    pub dv2: f64,
}

/// `(r^η − 1)(r^{1−η} − 1)/ln²r` as a function of `L = ln r`.
fn f_eta(eta: f64, log_r: f64) -> f64 {
    if log_r.abs() < LOG_RATIO_SERIES_MAX {
        return eta * (1.0 - eta) * (1.0 + 0.5 * log_r);
    }
    (eta * log_r).exp_m1() * ((1.0 - eta) * log_r).exp_m1() / (log_r * log_r)
}

/// `∂^k f_η/∂η^k` at η = 0: `−L^{k−2}(1 + (−1)^k e^L)`.
fn f_eta_derivative(k: u32, log_r: f64) -> f64 {
    match k {
        1 => {
            if log_r.abs() < LOG_RATIO_SERIES_MAX {
                1.0 + 0.5 * log_r
            } else {
                log_r.exp_m1() / log_r
            }
        }
        _ => {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let bracket = if sign > 0.0 {
                1.0 + log_r.exp()
            } else {
                -log_r.exp_m1()
            };
            -log_r.powi(k as i32 - 2) * bracket
        }
    }
}

/// `c_nm = (p_n − p_m)/ln(p_n/p_m)`, `c_nn = p_n`, written as `p_m g(L)`.
fn kubo_weight(p_m: f64, log_r: f64) -> f64 {
    p_m * f_eta_derivative(1, log_r)
}

/// All `(n, m)` terms for the given temperature and η.
pub fn spectral_components(
    sys: &QuantumSystem,
    params: &ThermalParams,
    eta: f64,
) -> Vec<SpectralComponent> {
    let dim = sys.dim();
    let e = sys.energies();
    let gibbs = GibbsState::new(e.as_slice(), params.beta);
    let p = &gibbs.populations;
    let mut dv = sys.v_eigenbasis();
    let mean: Complex64 = (0..dim).map(|n| dv[(n, n)] * p[n]).sum();
    for n in 0..dim {
        dv[(n, n)] -= mean;
    }
    let mut out = Vec::with_capacity(dim * dim);
    for n in 0..dim {
        for m in 0..dim {
            // ln(p_n/p_m) from the energies, exact even when p underflows
            let log_r = -params.beta * (e[n] - e[m]);
            let dv2 = dv[(n, m)].norm_sqr();
            out.push(SpectralComponent {
                n,
                m,
                omega: (e[n] - e[m]) / params.hbar,
                relaxation: params.beta * params.beta * kubo_weight(p[m], log_r) * dv2,
                covariance: p[m] * f_eta(eta, log_r) * dv2,
                log_ratio: log_r,
                p_m: p[m],
                dv2,
            });
        }
    }
    out
}

/// Ψ₀(t) = β² Σ_{nm} e^{i(ε_n−ε_m)t/ħ} c_nm |δV_nm|².
pub fn relaxation_exact(sys: &QuantumSystem, params: &ThermalParams, t: f64) -> f64 {
    let sum: Complex64 = spectral_components(sys, params, 0.5)
        .iter()
        .map(|c| Complex64::from_polar(c.relaxation, c.omega * t))
        .sum();
    debug_assert!(sum.im.abs() <= 1e-12 * sum.re.abs().max(1.0));
    sum.re
}

/// ⟨⟨δV(t), δV(t')⟩⟩^η: the η-covariance, a function of `t − t'` only.
pub fn generalized_covariance(
    sys: &QuantumSystem,
    params: &ThermalParams,
    eta: f64,
    t: f64,
    t_prime: f64,
) -> Result<f64, OracleError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(OracleError::InvalidArgument(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let s = t - t_prime;
    let sum: Complex64 = spectral_components(sys, params, eta)
        .iter()
        .map(|c| Complex64::from_polar(c.covariance, c.omega * s))
        .sum();
    Ok(sum.re)
}

/// Linear-response CGF, `K(η) = −β² ∫₀^τ dt ∫₀^t dt' λ̇_t λ̇_t' C_η(t − t')`,
/// summed in closed form: each Bohr frequency contributes `½ S(ω)`.
pub fn lrt_cgf(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    eta: f64,
) -> Result<f64, OracleError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(OracleError::InvalidArgument(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let b2 = params.beta * params.beta;
    Ok(-0.5
        * b2
        * spectral_components(sys, params, eta)
            .iter()
            .map(|c| c.covariance * protocol.spectral_weight(c.omega))
            .sum::<f64>())
}

/// The same CGF with the double time integral done by quadrature.
pub fn lrt_cgf_time_domain(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    eta: f64,
    rel_tol: f64,
) -> Result<f64, OracleError> {
    let comps = spectral_components(sys, params, eta);
    let f = |t: f64, s: f64| {
        let c: f64 = comps
            .iter()
            .map(|c| c.covariance * (c.omega * (t - s)).cos())
            .sum();
        protocol.rate(t) * protocol.rate(s) * c
    };
    let spec = QuadSpec::default()
        .with_rel_tol(rel_tol)
        .with_abs_tol(1e-300)
        .with_length_scale(protocol.tau());
    let e = integrate_triangle(&f, protocol.tau(), &protocol.breakpoints(), &spec)
        .map_err(|e| OracleError::InvalidArgument(e.to_string()))?;
    Ok(-params.beta * params.beta * e.value)
}

/// κ^k = (−1/β)^k d^k K/dη^k at η = 0, with the η-derivatives taken
/// analytically inside the spectral sum.
pub fn lrt_cumulant(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    k: u32,
) -> Result<f64, OracleError> {
    if k == 0 {
        return Err(OracleError::InvalidArgument("cumulant order must be >= 1".into()));
    }
    let b2 = params.beta * params.beta;
    let d: f64 = spectral_components(sys, params, 0.5)
        .iter()
        .map(|c| c.p_m * f_eta_derivative(k, c.log_ratio) * c.dv2 * protocol.spectral_weight(c.omega))
        .sum();
    Ok((-1.0 / params.beta).powi(k as i32) * (-0.5 * b2 * d))
}
