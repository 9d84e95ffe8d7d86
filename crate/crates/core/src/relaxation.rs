//! Phenomenological relaxation functions Ψ₀(t) and their spectra.
//!
//! Fourier convention: `F[f](ω) = (1/√(2π)) ∫ f(t) e^{iωt} dt`.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate_halfline, QuadSpec};
use crate::special::bessel_j0;

/// Net factor `γ·c` in the Bessel spectrum `Ψ₀(0)√(2/π)·γc/√(γ²−ω²)`.
///
/// Fixed by the sum rule Ψ₀(t=0) = Ψ₀(0): `√(2/π)∫₀^γ dω/√(γ²−ω²) = √(π/2)`,
/// so `c = 1/γ` (equivalently `∫J₀(γt)e^{iωt}dt = 2/√(γ²−ω²)`).
pub const BESSEL_NORMALIZATION: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxationError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("time {t} outside tabulated range [-{max}, {max}]")]
    OutOfRange { t: f64, max: f64 },
    #[error("integrable singularity of the spectrum at omega = {omega}")]
    IntegrableSingularity { omega: f64 },
    #[error("relaxation timescale undefined: {0}")]
    TimescaleUndefined(String),
}

/// Uniformly sampled Ψ₀(t) on `[0, dt·(n−1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    dt: f64,
    values: Vec<f64>,
}

impl Table {
    /// Builds a uniform table, resampling by linear interpolation when the
    /// input times are not equally spaced.
    pub fn new(samples: &[(f64, f64)]) -> Result<Self, RelaxationError> {
        if samples.len() < 2 {
            return Err(RelaxationError::Invalid(
                "table needs at least two samples".into(),
            ));
        }
        if samples[0].0 != 0.0 {
            return Err(RelaxationError::Invalid(format!(
                "table must start at t = 0, starts at {}",
                samples[0].0
            )));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(RelaxationError::Invalid(format!(
                    "table times must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if samples.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(RelaxationError::Invalid("table has non-finite entries".into()));
        }
        let n = samples.len();
        let end = samples[n - 1].0;
        let dt = end / (n - 1) as f64;
        let uniform = samples
            .iter()
            .enumerate()
            .all(|(i, &(t, _))| (t - i as f64 * dt).abs() <= 1e-9 * end);
        let values = if uniform {
            samples.iter().map(|&(_, v)| v).collect()
        } else {
            (0..n)
                .map(|i| interpolate(samples, i as f64 * dt))
                .collect()
        };
        Ok(Table { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    fn eval(&self, t: f64) -> Result<f64, RelaxationError> {
        let at = t.abs();
        let max = self.duration();
        if at > max {
            return Err(RelaxationError::OutOfRange { t, max });
        }
        let s = at / self.dt;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// Trapezoidal cosine transform of the even extension.
    fn spectrum(&self, omega: f64) -> f64 {
        let n = self.values.len();
        let mut s = 0.5 * self.values[0];
        for (j, &v) in self.values.iter().enumerate().skip(1) {
            let w = if j + 1 == n { 0.5 } else { 1.0 };
            s += w * v * (omega * j as f64 * self.dt).cos();
        }
        FRAC_2_PI.sqrt() * self.dt * s
    }
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let k = samples.partition_point(|&(ts, _)| ts <= t);
    if k == 0 {
        return samples[0].1;
    }
    if k >= samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (t0, v0) = samples[k - 1];
    let (t1, v1) = samples[k];
    v0 + (t - t0) / (t1 - t0) * (v1 - v0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Overdamped,
    Underdamped { nu: f64 },
    Bessel,
    Tabulated(Table),
}

/// How far the spectrum extends along the positive frequency axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralSupport {
    /// Ψ̃₀(ω) ~ ω^{−decay} for large ω.
    Unbounded { decay: f64 },
    /// Ψ̃₀ vanishes beyond `edge`; near it behaves as `(edge−ω)^{exponent}`
    /// when `edge_exponent` is set.
    Compact {
        edge: f64,
        edge_exponent: Option<f64>,
    },
}

/// A validated relaxation-function model. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct RelaxationModel {
    psi0: f64,
    gamma: f64,
    kind: ModelKind,
}

/// Serialized form of [`RelaxationModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Overdamped {
        psi0: f64,
        gamma: f64,
    },
    Underdamped {
        psi0: f64,
        gamma: f64,
        nu: f64,
    },
    Bessel {
        psi0: f64,
        gamma: f64,
    },
    Tabulated {
        table: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl TryFrom<ModelSpec> for RelaxationModel {
    type Error = RelaxationError;

    fn try_from(spec: ModelSpec) -> Result<Self, Self::Error> {
        match spec {
            ModelSpec::Overdamped { psi0, gamma } => RelaxationModel::overdamped(psi0, gamma),
            ModelSpec::Underdamped { psi0, gamma, nu } => {
                RelaxationModel::underdamped(psi0, gamma, nu)
            }
            ModelSpec::Bessel { psi0, gamma } => RelaxationModel::bessel(psi0, gamma),
            ModelSpec::Tabulated { table, gamma } => RelaxationModel::tabulated(&table, gamma),
        }
    }
}

impl From<RelaxationModel> for ModelSpec {
    fn from(m: RelaxationModel) -> Self {
        match m.kind {
            ModelKind::Overdamped => ModelSpec::Overdamped {
                psi0: m.psi0,
                gamma: m.gamma,
            },
            ModelKind::Underdamped { nu } => ModelSpec::Underdamped {
                psi0: m.psi0,
                gamma: m.gamma,
                nu,
            },
            ModelKind::Bessel => ModelSpec::Bessel {
                psi0: m.psi0,
                gamma: m.gamma,
            },
            ModelKind::Tabulated(t) => ModelSpec::Tabulated {
                table: t
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (i as f64 * t.dt, v))
                    .collect(),
                gamma: Some(m.gamma),
            },
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), RelaxationError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RelaxationError::Invalid(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl RelaxationModel {
    pub fn overdamped(psi0: f64, gamma: f64) -> Result<Self, RelaxationError> {
        positive("psi0", psi0)?;
        positive("gamma", gamma)?;
        Ok(RelaxationModel {
            psi0,
            gamma,
            kind: ModelKind::Overdamped,
        })
    }

    pub fn underdamped(psi0: f64, gamma: f64, nu: f64) -> Result<Self, RelaxationError> {
        positive("psi0", psi0)?;
        positive("gamma", gamma)?;
        positive("nu", nu)?;
        Ok(RelaxationModel {
            psi0,
            gamma,
            kind: ModelKind::Underdamped { nu },
        })
    }

    pub fn bessel(psi0: f64, gamma: f64) -> Result<Self, RelaxationError> {
        positive("psi0", psi0)?;
        positive("gamma", gamma)?;
        Ok(RelaxationModel {
            psi0,
            gamma,
            kind: ModelKind::Bessel,
        })
    }

    /// Tabulated Ψ₀(t), t ≥ 0. `gamma` only sets the rate used for the
    /// dimensionless sweep variables; it defaults to `1/τ_R` when that is
    /// positive and to `1/T` otherwise.
    pub fn tabulated(samples: &[(f64, f64)], gamma: Option<f64>) -> Result<Self, RelaxationError> {
        let table = Table::new(samples)?;
        let psi0 = table.values[0];
        positive("tabulated value at t = 0", psi0)?;
        let gamma = match gamma {
            Some(g) => {
                positive("gamma", g)?;
                g
            }
            None => {
                let tau_r = trapezoid(&table.values, table.dt) / psi0;
                if tau_r > 0.0 {
                    1.0 / tau_r
                } else {
                    1.0 / table.duration()
                }
            }
        };
        Ok(RelaxationModel {
            psi0,
            gamma,
            kind: ModelKind::Tabulated(table),
        })
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Overdamped => "overdamped",
            ModelKind::Underdamped { .. } => "underdamped",
            ModelKind::Bessel => "bessel",
            ModelKind::Tabulated(_) => "tabulated",
        }
    }

    /// Same model with a different amplitude Ψ₀(0) (tabulated values are rescaled).
    pub fn with_psi0(&self, psi0: f64) -> Result<Self, RelaxationError> {
        positive("psi0", psi0)?;
        let kind = match &self.kind {
            ModelKind::Tabulated(t) => {
                let s = psi0 / self.psi0;
                ModelKind::Tabulated(Table {
                    dt: t.dt,
                    values: t.values.iter().map(|v| v * s).collect(),
                })
            }
            k => k.clone(),
        };
        Ok(RelaxationModel {
            psi0,
            gamma: self.gamma,
            kind,
        })
    }

    /// Ψ₀(t).
    pub fn eval_time(&self, t: f64) -> Result<f64, RelaxationError> {
        let g = self.gamma;
        let at = t.abs();
        Ok(match &self.kind {
            ModelKind::Overdamped => self.psi0 * (-g * at).exp(),
            ModelKind::Underdamped { nu } => {
                self.psi0 * (-g * at).exp() * ((nu * at).cos() + g / nu * (nu * at).sin())
            }
            ModelKind::Bessel => self.psi0 * bessel_j0(g * at),
            ModelKind::Tabulated(table) => table.eval(t)?,
        })
    }

    /// Ψ̃₀(ω) ≥ 0.
    pub fn eval_freq(&self, omega: f64) -> Result<f64, RelaxationError> {
        let g = self.gamma;
        let w2 = omega * omega;
        let amp = self.psi0 * FRAC_2_PI.sqrt();
        Ok(match &self.kind {
            ModelKind::Overdamped => amp * g / (g * g + w2),
            ModelKind::Underdamped { nu } => {
                let s = nu * nu + g * g;
                let d = s - w2;
                amp * 2.0 * g * s / (d * d + 4.0 * g * g * w2)
            }
            ModelKind::Bessel => {
                let g2 = g * g;
                if w2 < g2 {
                    amp * BESSEL_NORMALIZATION / (g2 - w2).sqrt()
                } else if w2 == g2 {
                    return Err(RelaxationError::IntegrableSingularity { omega });
                } else {
                    0.0
                }
            }
            ModelKind::Tabulated(table) => {
                if omega.abs() > table.nyquist() {
                    0.0
                } else {
                    table.spectrum(omega.abs())
                }
            }
        })
    }

    /// `Ψ̃₀(ω)·(edge − ω)^{−exponent}` on `[0, edge)` for models with a
    /// singular spectral edge: the part that stays bounded at the edge.
    pub fn eval_freq_regular_part(&self, omega: f64) -> Option<f64> {
        match self.kind {
            ModelKind::Bessel => {
                let g = self.gamma;
                Some(self.psi0 * FRAC_2_PI.sqrt() * BESSEL_NORMALIZATION / (g + omega.abs()).sqrt())
            }
            _ => None,
        }
    }

    pub fn spectral_support(&self) -> SpectralSupport {
        match &self.kind {
            ModelKind::Overdamped => SpectralSupport::Unbounded { decay: 2.0 },
            ModelKind::Underdamped { .. } => SpectralSupport::Unbounded { decay: 4.0 },
            ModelKind::Bessel => SpectralSupport::Compact {
                edge: self.gamma,
                edge_exponent: Some(-0.5),
            },
            ModelKind::Tabulated(t) => SpectralSupport::Compact {
                edge: t.nyquist(),
                edge_exponent: None,
            },
        }
    }

    /// Width of the finest non-oscillatory structure in Ψ̃₀.
    pub fn spectral_width(&self) -> f64 {
        match &self.kind {
            ModelKind::Overdamped | ModelKind::Underdamped { .. } => self.gamma,
            ModelKind::Bessel => 0.25 * self.gamma,
            // the trapezoid transform oscillates with period 2π/T
            ModelKind::Tabulated(t) => PI / t.duration(),
        }
    }

    /// Typical frequency carried by Ψ̃₀: the damping rate, or the resonance
    /// for the underdamped model.
    pub fn characteristic_frequency(&self) -> f64 {
        match &self.kind {
            ModelKind::Underdamped { nu } => (nu * nu + self.gamma * self.gamma).sqrt(),
            _ => self.gamma,
        }
    }

    /// Frequency beyond which Ψ̃₀ is monotonically decreasing.
    pub fn monotone_beyond(&self) -> f64 {
        match &self.kind {
            ModelKind::Overdamped => 0.0,
            ModelKind::Underdamped { nu } => 2.0 * (nu * nu + self.gamma * self.gamma).sqrt(),
            ModelKind::Bessel => self.gamma,
            ModelKind::Tabulated(t) => t.nyquist(),
        }
    }

    /// τ_R = ∫₀^∞ Ψ₀(t) dt / Ψ₀(0).
    pub fn relaxation_timescale(&self) -> Result<f64, RelaxationError> {
        let g = self.gamma;
        match &self.kind {
            ModelKind::Overdamped => Ok(1.0 / g),
            ModelKind::Underdamped { nu } => Ok(2.0 * g / (g * g + nu * nu)),
            ModelKind::Bessel => Err(RelaxationError::TimescaleUndefined(
                "J0 is not absolutely integrable".into(),
            )),
            ModelKind::Tabulated(t) => {
                let tau = trapezoid(&t.values, t.dt) / self.psi0;
                if tau > 0.0 {
                    Ok(tau)
                } else {
                    Err(RelaxationError::TimescaleUndefined(format!(
                        "tabulated integral is not positive ({tau})"
                    )))
                }
            }
        }
    }

    /// Evenness of Ψ₀(t) on a time grid and positivity of Ψ̃₀ on `omega_grid`.
    pub fn validate(&self, omega_grid: &[f64]) -> ValidationReport {
        let t_max = match &self.kind {
            ModelKind::Tabulated(t) => t.duration(),
            _ => 5.0 / self.gamma,
        };
        let mut evenness = None;
        for k in 0..=64 {
            let t = t_max * k as f64 / 64.0;
            let (a, b) = match (self.eval_time(t), self.eval_time(-t)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            if (a - b).abs() > 1e-15 * self.psi0 {
                evenness = Some(Violation { at: t, value: a - b });
                break;
            }
        }
        let scale = match &self.kind {
            ModelKind::Tabulated(t) => {
                FRAC_2_PI.sqrt() * t.dt * t.values.iter().map(|v| v.abs()).sum::<f64>()
            }
            _ => self.psi0 / self.gamma,
        };
        let mut positivity = None;
        for &w in omega_grid {
            match self.eval_freq(w) {
                Ok(v) if v < -1e-12 * scale || !v.is_finite() => {
                    positivity = Some(Violation { at: w, value: v });
                    break;
                }
                // the singular edge is +∞ and passes
                _ => {}
            }
        }
        ValidationReport {
            model: self.name().to_string(),
            passed: evenness.is_none() && positivity.is_none(),
            grid_points: omega_grid.len(),
            evenness_violation: evenness,
            positivity_violation: positivity,
        }
    }

    /// Ψ₀(t) recovered from the spectrum, `√(2/π)∫₀^∞ Ψ̃₀(ω) cos(ωt) dω`.
    /// Cross-check for the forward transforms.
    pub fn inverse_transform(&self, t: f64, rel_tol: f64) -> Result<f64, crate::quadrature::QuadError> {
        use crate::quadrature::integrate_endpoint_singular;
        let period = if t == 0.0 { None } else { Some(2.0 * PI / t.abs()) };
        let mut spec = QuadSpec::default()
            .with_rel_tol(rel_tol)
            .with_abs_tol(1e-300)
            .with_length_scale(self.spectral_width());
        if let Some(p) = period {
            spec = spec.with_period(p);
        }
        let v = match self.spectral_support() {
            SpectralSupport::Compact {
                edge,
                edge_exponent: Some(e),
            } => {
                let f = |w: f64| self.eval_freq_regular_part(w).unwrap_or(0.0) * (w * t).cos();
                integrate_endpoint_singular(&f, 0.0, edge, e, &spec)?.value
            }
            SpectralSupport::Compact { edge, .. } => {
                let f = |w: f64| self.eval_freq(w).unwrap_or(0.0) * (w * t).cos();
                integrate_halfline(&f, &spec.with_compact_support(edge))?.value
            }
            SpectralSupport::Unbounded { .. } => {
                let f = |w: f64| self.eval_freq(w).unwrap_or(0.0) * (w * t).cos();
                integrate_halfline(&f, &spec)?.value
            }
        };
        Ok(FRAC_2_PI.sqrt() * v)
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    dt * (0.5 * (values[0] + values[n - 1]) + inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub at: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub model: String,
    pub passed: bool,
    pub grid_points: usize,
    pub evenness_violation: Option<Violation>,
    pub positivity_violation: Option<Violation>,
}

/// Default positivity grid: `n` points spanning `[0, span·γ]`.
pub fn default_omega_grid(model: &RelaxationModel, n: usize, span: f64) -> Vec<f64> {
    let top = match model.spectral_support() {
        SpectralSupport::Compact { edge, .. } => edge,
        SpectralSupport::Unbounded { .. } => span * model.gamma().max(model.monotone_beyond()),
    };
    (0..n).map(|i| top * i as f64 / (n - 1).max(1) as f64).collect()
}
