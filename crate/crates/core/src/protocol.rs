//! Driving schedules λ_t = α·g_t on [0, τ] and their spectral weight
//! S(ω) = |∫₀^τ λ̇_t e^{iωt} dt|².
//!
//! Every supported rate λ̇ is piecewise linear, so its Fourier integral is a
//! finite sum over "events" (kinks and jumps of the rate):
//! `Λ(ω) = Σ_j e^{iωt_j} (A_j/(iω) − B_j/ω²)`. The period average of S is
//! then `Σ_j |q_j|²`, which the cumulant integrals use beyond their cut.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this `τω` the linear-ramp weight uses its Taylor series.
const LINEAR_SERIES_MAX: f64 = 1e-4;

/// Below this `ω·(τ/2)` general protocols use the moment expansion about
/// the midpoint, which avoids the 1/ω² cancellation of the event sum.
const MOMENT_SERIES_MAX: f64 = 0.5;
const MOMENT_TERMS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid protocol: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// g_t = t/τ.
    Linear,
    /// g through the knots `(t_i, g_i)`, starting at (0, 0).
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// ġ sampled at `N` equally spaced times over [0, τ], linearly interpolated.
    SampledRate { rates: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    t: f64,
    a: f64,
    b: f64,
}

impl Event {
    fn coefficient(&self, omega: f64) -> Complex64 {
        // A/(iω) − B/ω²
        Complex64::new(-self.b / (omega * omega), -self.a / omega)
    }

    fn magnitude(&self, omega: f64) -> f64 {
        (self.a * self.a / (omega * omega) + self.b * self.b / omega.powi(4)).sqrt()
    }
}

/// A validated driving protocol. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolSpec", into = "ProtocolSpec")]
pub struct DrivingProtocol {
    alpha: f64,
    tau: f64,
    shape: Shape,
    // unit-α events and midpoint moments of ġ
    events: Vec<Event>,
    moments: Vec<f64>,
}

fn default_alpha() -> f64 {
    1.0
}

/// Serialized form of [`DrivingProtocol`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Linear {
        alpha: f64,
        tau: f64,
    },
    PiecewiseLinear {
        #[serde(default = "default_alpha")]
        alpha: f64,
        knots: Vec<(f64, f64)>,
    },
    SampledRate {
        #[serde(default = "default_alpha")]
        alpha: f64,
        tau: f64,
        rates: Vec<f64>,
    },
}

impl TryFrom<ProtocolSpec> for DrivingProtocol {
    type Error = ProtocolError;

    fn try_from(spec: ProtocolSpec) -> Result<Self, Self::Error> {
        match spec {
            ProtocolSpec::Linear { alpha, tau } => DrivingProtocol::linear(alpha, tau),
            ProtocolSpec::PiecewiseLinear { alpha, knots } => {
                DrivingProtocol::piecewise_linear(alpha, &knots)
            }
            ProtocolSpec::SampledRate { alpha, tau, rates } => {
                DrivingProtocol::sampled_rate(alpha, tau, &rates)
            }
        }
    }
}

impl From<DrivingProtocol> for ProtocolSpec {
    fn from(p: DrivingProtocol) -> Self {
        match p.shape {
            Shape::Linear => ProtocolSpec::Linear {
                alpha: p.alpha,
                tau: p.tau,
            },
            Shape::PiecewiseLinear { knots } => ProtocolSpec::PiecewiseLinear {
                alpha: p.alpha,
                knots,
            },
            Shape::SampledRate { rates } => ProtocolSpec::SampledRate {
                alpha: p.alpha,
                tau: p.tau,
                rates,
            },
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), ProtocolError> {
    if alpha.is_finite() {
        Ok(())
    } else {
        Err(ProtocolError::Invalid(format!("alpha must be finite, got {alpha}")))
    }
}

fn check_tau(tau: f64) -> Result<(), ProtocolError> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(ProtocolError::Invalid(format!(
            "tau must be positive and finite, got {tau}"
        )))
    }
}

/// Rate pieces `(t_start, t_end, rate_at_start, slope)` of a shape.
fn pieces(shape: &Shape, tau: f64) -> Vec<(f64, f64, f64, f64)> {
    match shape {
        Shape::Linear => vec![(0.0, tau, 1.0 / tau, 0.0)],
        Shape::PiecewiseLinear { knots } => knots
            .windows(2)
            .map(|w| (w[0].0, w[1].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0), 0.0))
            .collect(),
        Shape::SampledRate { rates } => {
            let dt = tau / (rates.len() - 1) as f64;
            rates
                .windows(2)
                .enumerate()
                .map(|(j, w)| (j as f64 * dt, (j + 1) as f64 * dt, w[0], (w[1] - w[0]) / dt))
                .collect()
        }
    }
}

fn build_events(shape: &Shape, tau: f64) -> Vec<Event> {
    let mut ev = Vec::new();
    match shape {
        Shape::Linear | Shape::PiecewiseLinear { .. } => {
            // Λ = −Σ_j (r_j − r_{j−1}) e^{iωt_j}/(iω)
            let p = pieces(shape, tau);
            let mut prev = 0.0;
            for &(t0, _, r, _) in &p {
                ev.push(Event { t: t0, a: -(r - prev), b: 0.0 });
                prev = r;
            }
            let end = p.last().map(|x| x.1).unwrap_or(tau);
            ev.push(Event { t: end, a: prev, b: 0.0 });
        }
        Shape::SampledRate { rates } => {
            // two integrations by parts: boundary rates and slope jumps
            let n = rates.len();
            let dt = tau / (n - 1) as f64;
            let slope = |j: usize| -> f64 {
                if j + 1 < n {
                    (rates[j + 1] - rates[j]) / dt
                } else {
                    0.0
                }
            };
            for j in 0..n {
                let prev = if j == 0 { 0.0 } else { slope(j - 1) };
                let a = if j == 0 {
                    -rates[0]
                } else if j + 1 == n {
                    rates[n - 1]
                } else {
                    0.0
                };
                ev.push(Event {
                    t: j as f64 * dt,
                    a,
                    b: slope(j) - prev,
                });
            }
        }
    }
    ev.retain(|e| e.a != 0.0 || e.b != 0.0);
    ev
}

/// `M_n = ∫ ġ(t) (t − τ/2)^n dt` for n < MOMENT_TERMS.
fn build_moments(shape: &Shape, tau: f64) -> Vec<f64> {
    let c = 0.5 * tau;
    let mut m = vec![0.0; MOMENT_TERMS];
    for (t0, t1, r0, s) in pieces(shape, tau) {
        let (a, b) = (t0 - c, t1 - c);
        // ġ = p + s·u in the shifted variable u = t − c
        let p = r0 - s * a;
        let (mut an, mut bn) = (a, b);
        for k in 0..MOMENT_TERMS {
            let n = k as f64;
            let first = (bn - an) / (n + 1.0);
            let (an1, bn1) = (an * a, bn * b);
            let second = (bn1 - an1) / (n + 2.0);
            m[k] += p * first + s * second;
            an = an1;
            bn = bn1;
        }
    }
    m
}

impl DrivingProtocol {
    fn build(alpha: f64, tau: f64, shape: Shape) -> Self {
        let events = build_events(&shape, tau);
        let moments = build_moments(&shape, tau);
        DrivingProtocol {
            alpha,
            tau,
            shape,
            events,
            moments,
        }
    }

    /// λ_t = αt/τ.
    pub fn linear(alpha: f64, tau: f64) -> Result<Self, ProtocolError> {
        check_alpha(alpha)?;
        check_tau(tau)?;
        Ok(Self::build(alpha, tau, Shape::Linear))
    }

    /// λ_t = α·g_t with g through `knots`; the first knot must be (0, 0).
    pub fn piecewise_linear(alpha: f64, knots: &[(f64, f64)]) -> Result<Self, ProtocolError> {
        check_alpha(alpha)?;
        if knots.len() < 2 {
            return Err(ProtocolError::Invalid("need at least two knots".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(ProtocolError::Invalid(format!(
                "first knot must be (0, 0) so that the drive starts switched off, got {:?}",
                knots[0]
            )));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].1.is_finite() {
                return Err(ProtocolError::Invalid(format!(
                    "knot times must increase strictly with finite values ({:?} then {:?})",
                    w[0], w[1]
                )));
            }
        }
        let tau = knots[knots.len() - 1].0;
        check_tau(tau)?;
        Ok(Self::build(
            alpha,
            tau,
            Shape::PiecewiseLinear {
                knots: knots.to_vec(),
            },
        ))
    }

    /// λ̇_t = α·ġ_t with ġ sampled at `rates.len()` equally spaced times.
    pub fn sampled_rate(alpha: f64, tau: f64, rates: &[f64]) -> Result<Self, ProtocolError> {
        check_alpha(alpha)?;
        check_tau(tau)?;
        if rates.len() < 2 {
            return Err(ProtocolError::Invalid("need at least two rate samples".into()));
        }
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(ProtocolError::Invalid("rate samples must be finite".into()));
        }
        Ok(Self::build(
            alpha,
            tau,
            Shape::SampledRate {
                rates: rates.to_vec(),
            },
        ))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::Linear => "linear",
            Shape::PiecewiseLinear { .. } => "piecewise_linear",
            Shape::SampledRate { .. } => "sampled_rate",
        }
    }

    /// Same shape with a different strength α.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ProtocolError> {
        check_alpha(alpha)?;
        Ok(DrivingProtocol {
            alpha,
            ..self.clone()
        })
    }

    /// Same shape stretched to duration `tau`; knot times scale along.
    pub fn with_tau(&self, tau: f64) -> Result<Self, ProtocolError> {
        check_tau(tau)?;
        let shape = match &self.shape {
            Shape::PiecewiseLinear { knots } => {
                let s = tau / self.tau;
                Shape::PiecewiseLinear {
                    knots: knots.iter().map(|&(t, g)| (t * s, g)).collect(),
                }
            }
            other => other.clone(),
        };
        Ok(Self::build(self.alpha, tau, shape))
    }

    /// True when λ̇ ≡ 0.
    pub fn is_null(&self) -> bool {
        self.alpha == 0.0 || self.events.is_empty()
    }

    /// Unit-α Fourier integral of the rate.
    fn unit_transform(&self, omega: f64) -> Complex64 {
        let c = 0.5 * self.tau;
        if (omega * c).abs() < MOMENT_SERIES_MAX {
            let iw = Complex64::new(0.0, omega);
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for (n, &m) in self.moments.iter().enumerate() {
                sum += term * m;
                term = term * iw / (n as f64 + 1.0);
            }
            return sum * Complex64::from_polar(1.0, omega * c);
        }
        self.events
            .iter()
            .map(|e| e.coefficient(omega) * Complex64::from_polar(1.0, omega * e.t))
            .sum()
    }

    /// `∫₀^τ λ̇_t e^{iωt} dt`.
    pub fn rate_transform(&self, omega: f64) -> Complex64 {
        self.unit_transform(omega) * self.alpha
    }

    /// S(ω) = |∫₀^τ λ̇_t e^{iωt} dt|².
    pub fn spectral_weight(&self, omega: f64) -> f64 {
        let a2 = self.alpha * self.alpha;
        match self.shape {
            Shape::Linear => {
                let x = self.tau * omega;
                if x.abs() < LINEAR_SERIES_MAX {
                    a2 * (1.0 - x * x / 12.0)
                } else {
                    let s = (0.5 * x).sin();
                    4.0 * a2 * s * s / (x * x)
                }
            }
            _ => a2 * self.unit_transform(omega).norm_sqr(),
        }
    }

    /// Period average of S at large ω: `α² Σ_j |q_j(ω)|²`.
    pub fn spectral_mean(&self, omega: f64) -> f64 {
        let s: f64 = self.events.iter().map(|e| e.magnitude(omega).powi(2)).sum();
        self.alpha * self.alpha * s
    }

    /// `∫_W^∞ F(ω)(S(ω) − S̄(ω)) dω` for a smooth envelope `F`, with an
    /// error bound.
    ///
    /// Each oscillating cross term `2Re[q̄_j q_l e^{iΔω}]` is integrated by
    /// parts twice; derivatives of the amplitude come from central
    /// differences. The bound covers the dropped remainder when the third
    /// derivative of `F q̄_j q_l` keeps its sign beyond `W`.
    pub fn oscillating_tail(&self, envelope: &dyn Fn(f64) -> f64, cut: f64) -> (f64, f64) {
        let delta = 0.01 * cut;
        let nodes = [cut - delta, cut, cut + delta];
        let env = nodes.map(envelope);
        let q: Vec<[Complex64; 3]> = self
            .events
            .iter()
            .map(|e| nodes.map(|w| e.coefficient(w)))
            .collect();
        let i = Complex64::new(0.0, 1.0);
        let (mut value, mut bound) = (0.0, 0.0);
        for j in 0..self.events.len() {
            for l in j + 1..self.events.len() {
                let d = self.events[l].t - self.events[j].t;
                let amp: [Complex64; 3] =
                    std::array::from_fn(|n| 2.0 * env[n] * q[j][n].conj() * q[l][n]);
                let a0 = amp[1];
                let a1 = (amp[2] - amp[0]) / (2.0 * delta);
                let a2 = (amp[2] - 2.0 * amp[1] + amp[0]) / (delta * delta);
                let id = i * d;
                let term = -Complex64::from_polar(1.0, d * cut) * (a0 / id - a1 / (id * id));
                value += term.re;
                bound += 4.0 * a2.norm() / d.powi(3) + 1e-3 * a1.norm() / (d * d);
            }
        }
        let a2 = self.alpha * self.alpha;
        (a2 * value, a2 * bound)
    }

    /// Power of ω with which the mean spectral weight decays.
    pub fn mean_decay(&self) -> f64 {
        if self.events.iter().any(|e| e.a != 0.0) {
            2.0
        } else {
            4.0
        }
    }

    /// Period of the fastest oscillation of S(ω).
    pub fn oscillation_period(&self) -> f64 {
        let span = match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) if b.t > a.t => b.t - a.t,
            _ => self.tau,
        };
        2.0 * PI / span
    }

    /// Times where λ̇ is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Linear => vec![0.0, self.tau],
            Shape::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            Shape::SampledRate { rates } => {
                let dt = self.tau / (rates.len() - 1) as f64;
                (0..rates.len()).map(|j| j as f64 * dt).collect()
            }
        }
    }

    /// λ̇_t (zero outside [0, τ]).
    pub fn rate(&self, t: f64) -> f64 {
        if !(0.0..=self.tau).contains(&t) {
            return 0.0;
        }
        for (t0, t1, r0, s) in pieces(&self.shape, self.tau) {
            if t <= t1 {
                return self.alpha * (r0 + s * (t - t0));
            }
        }
        0.0
    }

    /// λ_t, held at λ_τ after the protocol ends.
    pub fn lambda(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.min(self.tau);
        let mut acc = 0.0;
        for (t0, t1, r0, s) in pieces(&self.shape, self.tau) {
            let hi = t.min(t1);
            let d = hi - t0;
            acc += r0 * d + 0.5 * s * d * d;
            if t <= t1 {
                break;
            }
        }
        self.alpha * acc
    }

    /// λ_τ.
    pub fn final_value(&self) -> f64 {
        self.lambda(self.tau)
    }

    /// max over [0, τ] of |λ_t|.
    pub fn max_amplitude(&self) -> f64 {
        let mut best: f64 = 0.0;
        let mut acc: f64 = 0.0;
        for (t0, t1, r0, s) in pieces(&self.shape, self.tau) {
            let d = t1 - t0;
            best = best.max(acc.abs());
            // interior extremum where the rate crosses zero
            if s != 0.0 {
                let u = -r0 / s;
                if u > 0.0 && u < d {
                    best = best.max((acc + r0 * u + 0.5 * s * u * u).abs());
                }
            }
            acc += r0 * d + 0.5 * s * d * d;
        }
        best = best.max(acc.abs());
        self.alpha.abs() * best
    }
}
