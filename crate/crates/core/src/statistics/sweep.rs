//! Fano factor and its zero-point bound over a grid of temperatures and
//! ramp durations, for a linear ramp with α = 1.

use rayon::prelude::*;
use serde::Serialize;

use super::closed_form::bessel_mean_frequency;
use super::{
    cumulant, fano_factor, jensen_bound, jensen_from_mean, StatsConfig, StatsError, ThermalParams,
};
use crate::protocol::DrivingProtocol;
use crate::relaxation::{ModelKind, RelaxationModel};
use crate::special::STRUVE_MAX_ARG;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// βħγ.
    pub x: f64,
    /// γτ.
    pub y: f64,
    /// βF_W.
    pub beta_fano: f64,
    /// β times the zero-point bound.
    pub beta_bound: f64,
    /// βκ¹/(Ψ₀(0)α²).
    pub scaled_mean: f64,
    /// (F_W − bound)/F_W.
    pub rel_gap: f64,
    /// Relative error estimate of `beta_fano`.
    pub err_estimate: f64,
    /// Set when a point fell back to another method or failed.
    pub flag: Option<String>,
}

/// Every `(params, y)` pair, params-major, evaluated in parallel.
pub fn fano_sweep(
    model: &RelaxationModel,
    params_list: &[ThermalParams],
    y_grid: &[f64],
    cfg: &StatsConfig,
) -> Vec<SweepRow> {
    let points: Vec<(ThermalParams, f64)> = params_list
        .iter()
        .flat_map(|p| y_grid.iter().map(move |&y| (*p, y)))
        .collect();
    points
        .par_iter()
        .map(|(p, y)| {
            sweep_point(model, p, *y, cfg).unwrap_or_else(|e| SweepRow {
                x: p.u(model.gamma()),
                y: *y,
                beta_fano: f64::NAN,
                beta_bound: f64::NAN,
                scaled_mean: f64::NAN,
                rel_gap: f64::NAN,
                err_estimate: f64::NAN,
                flag: Some(e.to_string()),
            })
        })
        .collect()
}

pub fn sweep_point(
    model: &RelaxationModel,
    params: &ThermalParams,
    y: f64,
    cfg: &StatsConfig,
) -> Result<SweepRow, StatsError> {
    let gamma = model.gamma();
    let protocol = DrivingProtocol::linear(1.0, y / gamma)
        .map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    let fano = fano_factor(model, &protocol, params, cfg)?;
    let k1 = cumulant(1, model, &protocol, params, cfg)?;
    let mut flag = None;
    let bound = match model.kind() {
        ModelKind::Bessel if y <= STRUVE_MAX_ARG => {
            jensen_from_mean(gamma * bessel_mean_frequency(y)?, params)
        }
        ModelKind::Bessel => {
            flag = Some("bound by quadrature: closed form out of range".to_string());
            jensen_bound(model, &protocol, params, cfg)?
        }
        _ => jensen_bound(model, &protocol, params, cfg)?,
    };
    let b = params.beta;
    Ok(SweepRow {
        x: params.u(gamma),
        y,
        beta_fano: b * fano.ratio,
        beta_bound: b * bound,
        scaled_mean: b * k1.value / model.psi0(),
        rel_gap: (fano.ratio - bound) / fano.ratio,
        err_estimate: fano.rel_err,
        flag,
    })
}

/// `n` points spaced logarithmically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
