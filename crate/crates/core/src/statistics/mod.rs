//! Linear-response work statistics from a relaxation function and a protocol.
//!
//! Everything here is a frequency integral `∫₀^∞ Ψ̃₀(ω) w(ω) S(ω) dω` for
//! some weight `w`: cumulants, the cumulant generating function, pseudo-mode
//! moments. Integrals over ℝ are folded onto the half-line using evenness of
//! each factor.

pub mod closed_form;
mod kernels;
pub mod sweep;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::DrivingProtocol;
use crate::quadrature::{
    integrate_endpoint_singular, integrate_halfline, integrate_halfline_split, integrate_triangle,
    Estimate, OscillatoryTail, QuadError, QuadSpec,
};
use crate::relaxation::{RelaxationError, RelaxationModel, SpectralSupport};
use crate::special::{x_coth_half, SpecialError};

pub use kernels::{cgf_kernel, cumulant_weight};

/// `1/√(2π)`: the prefactor of the cumulant integrals, and the CGF
/// convention constant (fixed by matching η-derivatives to the cumulants).
pub const CGF_CONVENTION: f64 = 0.398_942_280_401_432_7;

/// Largest stencil step: the six stencil points stay within η ≤ ¼.
const MAX_STENCIL_STEP: f64 = 0.05;

/// Finite-difference settings for the η-derivatives of the CGF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeConfig {
    /// Coarsest step in units of `1/(βħω_c)`; Richardson extrapolation uses
    /// `step / 2^j` for `j < levels`.
    pub step: f64,
    pub levels: u32,
    /// Relative quadrature tolerance for the stencil integrals.
    pub quad_rel_tol: f64,
    /// Relative agreement required between CGF derivatives and cumulants.
    pub rel_tol: f64,
}

impl Default for DerivativeConfig {
    fn default() -> Self {
        DerivativeConfig {
            step: 1e-3,
            levels: 3,
            quad_rel_tol: 1e-7,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub rel_tol: f64,
    /// Absolute tolerance on integrals normalised by Ψ₀(0)α².
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub derivative: DerivativeConfig,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_subdivisions: 2_000_000,
            derivative: DerivativeConfig::default(),
        }
    }
}

impl StatsConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Inverse temperature β and ħ, with k_B = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThermal")]
pub struct ThermalParams {
    pub beta: f64,
    pub hbar: f64,
}

#[derive(Deserialize)]
struct RawThermal {
    beta: f64,
    #[serde(default = "one")]
    hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawThermal> for ThermalParams {
    type Error = StatsError;

    fn try_from(r: RawThermal) -> Result<Self, StatsError> {
        ThermalParams::new(r.beta, r.hbar)
    }
}

impl ThermalParams {
    pub fn new(beta: f64, hbar: f64) -> Result<Self, StatsError> {
        if !(beta > 0.0 && beta.is_finite() && hbar > 0.0 && hbar.is_finite()) {
            return Err(StatsError::InvalidArgument(format!(
                "beta and hbar must be positive and finite, got {beta}, {hbar}"
            )));
        }
        Ok(ThermalParams { beta, hbar })
    }

    /// Parameters with `βħγ = x` at the given β.
    pub fn from_x(x: f64, gamma: f64, beta: f64) -> Result<Self, StatsError> {
        ThermalParams::new(beta, x / (beta * gamma))
    }

    /// `βħω`.
    pub fn u(&self, omega: f64) -> f64 {
        self.beta * self.hbar * omega
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cumulant of order {order} undefined for the {model} model: the frequency integral diverges")]
    Divergent { order: u32, model: String },
    #[error("protocol has zero spectral weight")]
    NullProtocol,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Relaxation(#[from] RelaxationError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// A cumulant with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantEstimate {
    pub order: u32,
    pub value: f64,
    pub err_estimate: f64,
}

/// Whether `∫ Ψ̃₀ w S` converges when `w` grows like `ω^growth`.
pub fn converges(model: &RelaxationModel, protocol: &DrivingProtocol, growth: f64) -> bool {
    match model.spectral_support() {
        SpectralSupport::Compact { .. } => true,
        SpectralSupport::Unbounded { decay } => growth - decay - protocol.mean_decay() < -1.0,
    }
}

/// `∫₀^∞ Ψ̃₀(ω) w(ω) S(ω) dω`, where `w` grows at most like `ω^growth`.
pub fn spectral_integral(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    weight: &(dyn Fn(f64) -> f64 + Sync),
    growth: f64,
    cfg: &StatsConfig,
) -> Result<Estimate, StatsError> {
    if protocol.is_null() {
        return Ok(Estimate::new(0.0, 0.0));
    }
    let scale = model.psi0() * protocol.alpha() * protocol.alpha();
    let spec = QuadSpec {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_subdivisions: cfg.max_subdivisions,
        ..QuadSpec::default()
    }
    .with_period(protocol.oscillation_period())
    .with_length_scale(model.spectral_width());

    // normalised factors: Ψ̃₀/Ψ₀(0) and S/α²
    let norm_s = |w: f64| protocol.spectral_weight(w) / (protocol.alpha() * protocol.alpha());
    let est = match model.spectral_support() {
        SpectralSupport::Compact {
            edge,
            edge_exponent: Some(e),
        } => {
            let f = |w: f64| {
                model.eval_freq_regular_part(w).unwrap_or(0.0) / model.psi0() * weight(w) * norm_s(w)
            };
            integrate_endpoint_singular(&f, 0.0, edge, e, &spec)?
        }
        SpectralSupport::Compact { edge, .. } => {
            let f = |w: f64| model.eval_freq(w).unwrap_or(0.0) / model.psi0() * weight(w) * norm_s(w);
            let period = protocol
                .oscillation_period()
                .min(2.0 * model.spectral_width());
            integrate_halfline(&f, &spec.with_period(period).with_compact_support(edge))?
        }
        SpectralSupport::Unbounded { .. } => {
            if !converges(model, protocol, growth) {
                return Err(StatsError::Divergent {
                    order: growth as u32 + 1,
                    model: model.name().to_string(),
                });
            }
            let envelope = |w: f64| model.eval_freq(w).unwrap_or(0.0) / model.psi0() * weight(w);
            let f = |w: f64| envelope(w) * norm_s(w);
            let a2 = protocol.alpha() * protocol.alpha();
            let mean = |w: f64| envelope(w) * protocol.spectral_mean(w) / a2;
            let remainder = |w: f64| {
                let (v, b) = protocol.oscillating_tail(&envelope, w);
                (v / a2, b / a2)
            };
            let tail = OscillatoryTail {
                mean: &mean,
                remainder: &remainder,
                min_cut: model.monotone_beyond().max(4.0 * model.gamma()),
            };
            integrate_halfline_split(&f, &tail, &spec)?
        }
    };
    Ok(Estimate::new(est.value * scale, est.err_estimate * scale.abs()))
}

/// κ^k in energy^k units.
pub fn cumulant(
    k: u32,
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<CumulantEstimate, StatsError> {
    if k == 0 {
        return Err(StatsError::InvalidArgument("cumulant order must be >= 1".into()));
    }
    let w = |omega: f64| cumulant_weight(k, params.u(omega));
    let growth = f64::from(k - 1);
    let est = spectral_integral(model, protocol, &w, growth, cfg).map_err(|e| match e {
        StatsError::Divergent { model, .. } => StatsError::Divergent { order: k, model },
        other => other,
    })?;
    // β^k κ^k = (2/√(2π)) ∫₀^∞ …
    let bk = params.beta.powi(k as i32);
    let c = 2.0 * CGF_CONVENTION / bk;
    Ok(CumulantEstimate {
        order: k,
        value: c * est.value,
        err_estimate: c * est.err_estimate,
    })
}

/// ⟨W_diss⟩ = κ¹.
pub fn average_dissipated_work(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<CumulantEstimate, StatsError> {
    cumulant(1, model, protocol, params, cfg)
}

/// `∫₀^τ∫₀^τ Ψ₀(t−t') λ̇_t λ̇_t' dt dt'`, by quadrature in the time domain.
pub fn time_domain_double_integral(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    rel_tol: f64,
) -> Result<f64, StatsError> {
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64, s: f64| match model.eval_time(t - s) {
        Ok(v) => v * protocol.rate(t) * protocol.rate(s),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let spec = QuadSpec::default()
        .with_rel_tol(rel_tol)
        .with_abs_tol(1e-300)
        .with_length_scale(protocol.tau().min(1.0 / model.gamma()));
    let bp = protocol.breakpoints();
    match integrate_triangle(&f, protocol.tau(), &bp, &spec) {
        Ok(e) => Ok(2.0 * e.value),
        Err(e) => match failure.borrow_mut().take() {
            Some(r) => Err(r.into()),
            None => Err(e.into()),
        },
    }
}

/// ⟨W_diss⟩ from `(1/2β)∫∫ Ψ₀(t−t') λ̇_t λ̇_t'`: a cross-check of the
/// frequency route.
pub fn average_dissipated_work_time_domain(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    rel_tol: f64,
) -> Result<f64, StatsError> {
    Ok(0.5 * time_domain_double_integral(model, protocol, rel_tol)? / params.beta)
}

/// K(η) = −(1/√(2π)) ∫_ℝ Ψ̃₀(ω) S(ω) g̃_η(ω) dω.
pub fn cgf(
    eta: f64,
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<Estimate, StatsError> {
    if !eta.is_finite() {
        return Err(StatsError::InvalidArgument(format!("eta must be finite, got {eta}")));
    }
    if eta == 0.0 || eta == 1.0 {
        return Ok(Estimate::new(0.0, 0.0));
    }
    let w = |omega: f64| cgf_kernel(eta, params.u(omega));
    // outside [0, 1] the kernel grows exponentially
    let growth = if (0.0..=1.0).contains(&eta) { -1.0 } else { f64::INFINITY };
    let est = spectral_integral(model, protocol, &w, growth, cfg)?;
    let c = -2.0 * CGF_CONVENTION;
    Ok(Estimate::new(c * est.value, c.abs() * est.err_estimate))
}

/// Weights of the forward stencil on `η = 0, h, …, 5h` for the k-th
/// derivative (exact for polynomials of degree 5), before division by h^k.
fn forward_stencil(k: u32) -> [f64; 6] {
    let n = 6;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    for p in 0..n {
        for j in 0..n {
            m[(p, j)] = (j as f64).powi(p as i32);
        }
    }
    rhs[k as usize] = (1..=k).map(f64::from).product();
    let sol = m.lu().solve(&rhs).expect("Vandermonde system is regular");
    let mut out = [0.0; 6];
    out.copy_from_slice(sol.as_slice());
    out
}

/// `d^k K/dη^k` at η = 0, k ∈ {1, 2, 3, 4}.
///
/// The stencil is applied to the kernel so that a single frequency integral
/// is evaluated per step size. K varies on the scale `1/(βħω_c)` in η, so the
/// configured step is measured in units of that scale (capped so the
/// stencil stays inside [0, ½]). Steps `h/2^j` are Richardson-combined to
/// cancel the leading error terms, which need not be integer powers of h
/// when Ψ̃₀ has an algebraic tail.
pub fn cgf_derivative(
    k: u32,
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<f64, StatsError> {
    if !(1..=4).contains(&k) {
        return Err(StatsError::InvalidArgument(format!(
            "CGF derivatives are provided for orders 1..=4, got {k}"
        )));
    }
    let levels = cfg.derivative.levels;
    if !(1..=6).contains(&levels) || !(cfg.derivative.step > 0.0 && cfg.derivative.step <= 0.1) {
        return Err(StatsError::InvalidArgument(format!(
            "derivative step {} and levels {levels} out of range",
            cfg.derivative.step
        )));
    }
    let coeffs = forward_stencil(k);
    let u_c = params.u(model.characteristic_frequency());
    let base = (cfg.derivative.step / u_c).min(MAX_STENCIL_STEP);
    let norm = spectral_integral(model, protocol, &|_| 1.0, 0.0, &cfg.with_rel_tol(1e-6))?.value
        / (model.psi0() * protocol.alpha() * protocol.alpha());
    let mut d = vec![0.0; levels as usize];
    for (level, slot) in d.iter_mut().enumerate() {
        let h = base / f64::powi(2.0, level as i32);
        let hk = h.powi(k as i32);
        // kernel values are ≤ η/2, so cancellation leaves this much roundoff
        let gross: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c.abs() * 0.5 * j as f64 * h)
            .sum();
        let qcfg = StatsConfig {
            rel_tol: cfg.rel_tol.max(cfg.derivative.quad_rel_tol),
            abs_tol: cfg.abs_tol.max(64.0 * f64::EPSILON * gross / hk * norm),
            ..*cfg
        };
        let w = |omega: f64| {
            let u = params.u(omega);
            let mut s = 0.0;
            for (j, c) in coeffs.iter().enumerate().skip(1) {
                s += c * cgf_kernel(j as f64 * h, u);
            }
            s / hk
        };
        let est = spectral_integral(model, protocol, &w, f64::from(k - 1), &qcfg)?;
        *slot = -2.0 * CGF_CONVENTION * est.value;
    }
    Ok(richardson_weights(levels)
        .iter()
        .zip(&d)
        .map(|(w, v)| w * v)
        .sum())
}

/// Weights combining estimates at `h / 2^j` so that error terms
/// `h, h², …, h^{levels−1}` cancel.
fn richardson_weights(levels: u32) -> Vec<f64> {
    let n = levels as usize;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for p in 0..n {
        for j in 0..n {
            m[(p, j)] = 0.5f64.powi((j * p) as i32);
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    rhs[0] = 1.0;
    let sol = m.lu().solve(&rhs).expect("Richardson system is regular");
    sol.iter().copied().collect()
}

/// κ^k recovered as `(−1/β)^k d^k K/dη^k |₀`.
pub fn cumulant_from_cgf(
    k: u32,
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<f64, StatsError> {
    let d = cgf_derivative(k, model, protocol, params, cfg)?;
    Ok((-1.0 / params.beta).powi(k as i32) * d)
}

/// Samples of the pseudo-mode density P̃(ω) = Ψ̃₀S / ∫₀^∞ Ψ̃₀S.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoModes {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    /// `∫₀^∞ Ψ̃₀ S dω`.
    pub normalization: f64,
    /// The same normalisation obtained from the time domain divided by the
    /// frequency-domain value; should be 1.
    pub norm_check: f64,
}

/// `∫₀^∞ Ψ̃₀ S dω` in the frequency domain.
pub fn pseudo_normalization(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    cfg: &StatsConfig,
) -> Result<Estimate, StatsError> {
    let n = spectral_integral(model, protocol, &|_| 1.0, 0.0, cfg)?;
    if n.value <= 0.0 {
        return Err(StatsError::NullProtocol);
    }
    Ok(n)
}

/// Ratio of the time-domain and frequency-domain pseudo-mode normalisation.
/// `∫_ℝ Ψ̃₀S dω = √(2π) ∫∫ Ψ₀(t−t')λ̇λ̇'`, so the half-line integral is
/// `√(π/2)` times the double integral. Tabulated models whose table is
/// shorter than τ fall back to a self-consistency check at doubled
/// precision.
pub fn pseudo_norm_check(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    cfg: &StatsConfig,
) -> Result<f64, StatsError> {
    let n = pseudo_normalization(model, protocol, cfg)?;
    match time_domain_double_integral(model, protocol, cfg.rel_tol.max(1e-12)) {
        Ok(td) => Ok((PI / 2.0).sqrt() * td / n.value),
        Err(StatsError::Relaxation(RelaxationError::OutOfRange { .. })) => {
            let tight = pseudo_normalization(model, protocol, &cfg.with_rel_tol(0.01 * cfg.rel_tol))?;
            Ok(tight.value / n.value)
        }
        Err(e) => Err(e),
    }
}

pub fn pseudo_mode_distribution(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    omega_grid: &[f64],
    cfg: &StatsConfig,
) -> Result<PseudoModes, StatsError> {
    let n = pseudo_normalization(model, protocol, cfg)?;
    let density = omega_grid
        .iter()
        .map(|&w| {
            let psi = match model.eval_freq(w) {
                Ok(v) => v,
                Err(RelaxationError::IntegrableSingularity { .. }) => f64::INFINITY,
                Err(e) => return Err(StatsError::from(e)),
            };
            let s = protocol.spectral_weight(w);
            Ok(if s == 0.0 { 0.0 } else { psi * s / n.value })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PseudoModes {
        omega: omega_grid.to_vec(),
        density,
        normalization: n.value,
        norm_check: pseudo_norm_check(model, protocol, cfg)?,
    })
}

/// ⟨ω⟩ over the pseudo-modes.
pub fn mean_pseudo_frequency(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    cfg: &StatsConfig,
) -> Result<Estimate, StatsError> {
    let n = pseudo_normalization(model, protocol, cfg)?;
    let m = spectral_integral(model, protocol, &|w| w, 1.0, cfg).map_err(|e| match e {
        StatsError::Divergent { model, .. } => StatsError::Divergent { order: 0, model },
        other => other,
    })?;
    let v = m.value / n.value;
    Ok(Estimate::new(v, v * (m.rel_err() + n.rel_err())))
}

/// Fano factor by both routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanoFactor {
    /// κ²/κ¹.
    pub ratio: f64,
    /// ⟨ħω coth(βħω/2)⟩ over the pseudo-modes.
    pub pseudo_mode: f64,
    /// Relative error estimate of `ratio`.
    pub rel_err: f64,
}

pub fn fano_factor(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<FanoFactor, StatsError> {
    let k1 = cumulant(1, model, protocol, params, cfg)?;
    if k1.value <= 0.0 {
        return Err(StatsError::NullProtocol);
    }
    let k2 = cumulant(2, model, protocol, params, cfg)?;
    let n = pseudo_normalization(model, protocol, cfg)?;
    // ħω coth(βħω/2)
    let w = |omega: f64| x_coth_half(params.u(omega)) / params.beta;
    let m = spectral_integral(model, protocol, &w, 1.0, cfg)?;
    Ok(FanoFactor {
        ratio: k2.value / k1.value,
        pseudo_mode: m.value / n.value,
        rel_err: k2.err_estimate / k2.value.abs() + k1.err_estimate / k1.value,
    })
}

/// `ħ⟨ω⟩ coth(βħ⟨ω⟩/2)` from a mean pseudo-frequency.
pub fn jensen_from_mean(mean_omega: f64, params: &ThermalParams) -> f64 {
    x_coth_half(params.u(mean_omega)) / params.beta
}

/// The zero-point (Jensen) lower bound on the Fano factor, by quadrature.
pub fn jensen_bound(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<f64, StatsError> {
    let m = mean_pseudo_frequency(model, protocol, cfg)?;
    Ok(jensen_from_mean(m.value, params))
}

/// Derivative-consistency diagnostics for orders 1..=3.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub order: u32,
    pub cumulant: f64,
    pub from_cgf: f64,
    pub rel_diff: f64,
    pub passed: bool,
}

pub fn derivative_consistency(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    cfg: &StatsConfig,
) -> Result<Vec<DerivativeCheck>, StatsError> {
    (1..=3)
        .map(|k| {
            let c = cumulant(k, model, protocol, params, cfg)?.value;
            let d = cumulant_from_cgf(k, model, protocol, params, cfg)?;
            let rel = (d - c).abs() / c.abs().max(f64::MIN_POSITIVE);
            Ok(DerivativeCheck {
                order: k,
                cumulant: c,
                from_cgf: d,
                rel_diff: rel,
                passed: rel <= cfg.derivative.rel_tol,
            })
        })
        .collect()
}

/// Everything computed for one (model, protocol, temperature) point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkStatisticsReport {
    pub model: String,
    pub protocol: String,
    pub beta: f64,
    pub hbar: f64,
    pub cumulants: Vec<CumulantEstimate>,
    /// Orders whose integral diverges for this model.
    pub divergent_orders: Vec<u32>,
    pub fano: f64,
    pub fano_pseudo_mode: f64,
    pub jensen_bound: f64,
    pub mean_pseudo_freq: f64,
    pub pseudo_norm: f64,
    pub cgf_samples: Vec<(f64, f64)>,
}

pub fn analyze(
    model: &RelaxationModel,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    max_order: u32,
    eta_grid: &[f64],
    cfg: &StatsConfig,
) -> Result<WorkStatisticsReport, StatsError> {
    let mut cumulants = Vec::new();
    let mut divergent = Vec::new();
    for k in 1..=max_order {
        match cumulant(k, model, protocol, params, cfg) {
            Ok(c) => cumulants.push(c),
            Err(StatsError::Divergent { order, .. }) => divergent.push(order),
            Err(e) => return Err(e),
        }
    }
    let fano = fano_factor(model, protocol, params, cfg)?;
    let mean = mean_pseudo_frequency(model, protocol, cfg)?;
    let cgf_samples = eta_grid
        .iter()
        .map(|&eta| cgf(eta, model, protocol, params, cfg).map(|k| (eta, k.value)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WorkStatisticsReport {
        model: model.name().to_string(),
        protocol: protocol.name().to_string(),
        beta: params.beta,
        hbar: params.hbar,
        cumulants,
        divergent_orders: divergent,
        fano: fano.ratio,
        fano_pseudo_mode: fano.pseudo_mode,
        jensen_bound: jensen_from_mean(mean.value, params),
        mean_pseudo_freq: mean.value,
        pseudo_norm: pseudo_norm_check(model, protocol, cfg)?,
        cgf_samples,
    })
}
