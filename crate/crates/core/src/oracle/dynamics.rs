use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use super::{eigh, CMatrix, OracleError, QuantumSystem, ThermalStateData};
use crate::protocol::DrivingProtocol;
use crate::statistics::ThermalParams;

/// Atoms closer than this fraction of the energy scale are merged.
const ATOM_MERGE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue ratio of ρ_τ.
const RANK_TOL: f64 = 64.0 * f64::EPSILON;

/// Step-doubling control for the time-ordered propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorSettings {
    pub initial_steps: usize,
    /// Largest relative change of any transition probability accepted
    /// between `n` and `2n` steps.
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        PropagatorSettings {
            initial_steps: 256,
            rel_tol: 1e-8,
            max_steps: 1 << 22,
        }
    }
}

/// `exp(−iτH/ħ)` for Hermitian `H`.
fn unitary_step(h: &CMatrix, dt_over_hbar: f64) -> CMatrix {
    let (e, v) = eigh(h);
    let phases = DVector::from_iterator(
        e.len(),
        e.iter().map(|&x| Complex64::from_polar(1.0, -x * dt_over_hbar)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Midpoint product propagator from 0 to `t_end` with `n` steps.
fn propagate(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    hbar: f64,
    t_end: f64,
    n: usize,
) -> CMatrix {
    let dt = t_end / n as f64;
    let mut u = CMatrix::identity(sys.dim(), sys.dim());
    for j in 0..n {
        let t = (j as f64 + 0.5) * dt;
        let step = unitary_step(&sys.hamiltonian(protocol.lambda(t)), dt / hbar);
        u = step * u;
    }
    nearest_unitary(u)
}

/// Polar factor `W V†` of `U = W Σ V†`, removing roundoff drift accumulated
/// over many step products.
fn nearest_unitary(u: CMatrix) -> CMatrix {
    let svd = u.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(w), Some(v_t)) => w * v_t,
        _ => unreachable!("svd computed with both factors requested"),
    }
}

/// U_τ ≈ Π_j exp(−iΔt H_{t_j}/ħ) with `t_j = (j + ½)Δt`, later times to the
/// left.
pub fn propagator(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    n_steps: usize,
) -> Result<CMatrix, OracleError> {
    if n_steps == 0 {
        return Err(OracleError::InvalidArgument("n_steps must be >= 1".into()));
    }
    Ok(propagate(sys, protocol, params.hbar, protocol.tau(), n_steps))
}

/// `p_n |⟨m'|U|n⟩|²` indexed `[m][n]`.
fn transition_weights(sys: &QuantumSystem, final_basis: &CMatrix, u: &CMatrix, p: &[f64]) -> Vec<Vec<f64>> {
    let a = final_basis.adjoint() * u * sys.basis();
    (0..sys.dim())
        .map(|m| (0..sys.dim()).map(|n| p[n] * a[(m, n)].norm_sqr()).collect())
        .collect()
}

/// The propagator with steps doubled until every transition probability is
/// stable to `settings.rel_tol`. Returns the number of steps used.
pub fn converged_propagator(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    settings: &PropagatorSettings,
) -> Result<(CMatrix, usize), OracleError> {
    let data = ThermalStateData::new(sys, protocol.final_value(), params);
    let (_, final_basis) = eigh(&sys.hamiltonian(protocol.final_value()));
    let p = &data.initial.populations;
    let mut n = settings.initial_steps.max(1);
    let u = propagator(sys, protocol, params, n)?;
    let mut w = transition_weights(sys, &final_basis, &u, p);
    let mut change = f64::INFINITY;
    loop {
        let n2 = 2 * n;
        if n2 > settings.max_steps {
            return Err(OracleError::NotConverged { steps: n, change });
        }
        let u2 = propagator(sys, protocol, params, n2)?;
        let w2 = transition_weights(sys, &final_basis, &u2, p);
        change = 0.0;
        let mut ok = true;
        for (r, r2) in w.iter().zip(&w2) {
            for (&a, &b) in r.iter().zip(r2) {
                let d = (a - b).abs();
                change = change.max(d);
                // probabilities at roundoff level cannot be resolved further
                if d > settings.rel_tol * b + 1e-15 {
                    ok = false;
                }
            }
        }
        if ok {
            return Ok((u2, n2));
        }
        n = n2;
        w = w2;
    }
}

/// Distribution of dissipated work under two-point energy measurements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TpmDistribution {
    /// `(w_diss, probability)`, ascending in `w_diss`.
    pub atoms: Vec<(f64, f64)>,
    pub beta: f64,
    pub delta_f: f64,
    pub steps: usize,
}

impl TpmDistribution {
    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// κ¹..κ⁴ of W_diss.
    pub fn cumulants(&self) -> [f64; 4] {
        let mean: f64 = self.atoms.iter().map(|(w, p)| p * w).sum();
        let central = |k: i32| -> f64 {
            self.atoms.iter().map(|(w, p)| p * (w - mean).powi(k)).sum()
        };
        let (m2, m3, m4) = (central(2), central(3), central(4));
        [mean, m2, m3, m4 - 3.0 * m2 * m2]
    }

    /// ln Σ P(w) e^{−ηβw}.
    pub fn log_mgf(&self, eta: f64) -> f64 {
        let exps: Vec<f64> = self.atoms.iter().map(|(w, _)| -eta * self.beta * w).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self
            .atoms
            .iter()
            .zip(&exps)
            .map(|((_, p), e)| p * (e - top).exp())
            .sum();
        top + s.ln()
    }
}

pub fn tpm_distribution(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    settings: &PropagatorSettings,
) -> Result<TpmDistribution, OracleError> {
    let (u, steps) = converged_propagator(sys, protocol, params, settings)?;
    let data = ThermalStateData::new(sys, protocol.final_value(), params);
    let (final_e, final_basis) = eigh(&sys.hamiltonian(protocol.final_value()));
    let w = transition_weights(sys, &final_basis, &u, &data.initial.populations);
    let mut raw = Vec::with_capacity(sys.dim() * sys.dim());
    for (m, row) in w.iter().enumerate() {
        for (n, &p) in row.iter().enumerate() {
            raw.push((final_e[m] - sys.energies()[n] - data.delta_f, p));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spread = final_e[final_e.len() - 1] - final_e[0];
    let tol = ATOM_MERGE_TOL * sys.energy_scale().max(spread);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (x, p) in raw {
        match atoms.last_mut() {
            Some(a) if x - last <= tol => {
                // probability-weighted position of the merged atom
                let total = a.1 + p;
                if total > 0.0 {
                    a.0 = (a.0 * a.1 + x * p) / total;
                }
                a.1 = total;
            }
            _ => atoms.push((x, p)),
        }
        last = x;
    }
    Ok(TpmDistribution {
        atoms,
        beta: params.beta,
        delta_f: data.delta_f,
        steps,
    })
}

/// ln Tr[π_τ^η ρ_τ^{1−η}] with ρ_τ = U_τ π₀ U_τ†, from eigendecompositions of
/// H_τ and of ρ_τ.
pub fn renyi_cgf(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    eta: f64,
    settings: &PropagatorSettings,
) -> Result<f64, OracleError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(OracleError::InvalidArgument(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let (u, _) = converged_propagator(sys, protocol, params, settings)?;
    let data = ThermalStateData::new(sys, protocol.final_value(), params);
    let pi0 = gibbs_matrix(sys.basis(), &data.initial.populations);
    let rho = &u * pi0 * u.adjoint();
    let (q, w) = eigh(&rho);
    let q_max = q.max();
    let q_min = q.min();
    if q_min <= RANK_TOL * q_max {
        return Err(OracleError::Precision {
            ratio: q_min / q_max,
        });
    }
    let rho_pow = gibbs_matrix(&w, &q.iter().map(|x| x.powf(1.0 - eta)).collect::<Vec<_>>());
    let (final_e, final_basis) = eigh(&sys.hamiltonian(protocol.final_value()));
    let log_z = data.final_state.log_z;
    let mut tr = 0.0;
    for m in 0..sys.dim() {
        let weight = (eta * (-params.beta * final_e[m] - log_z)).exp();
        let col = final_basis.column(m);
        let diag = (col.adjoint() * &rho_pow * col)[(0, 0)];
        tr += weight * diag.re;
    }
    Ok(tr.ln())
}

/// `Σ_n p_n |n⟩⟨n|` for orthonormal columns `|n⟩`.
fn gibbs_matrix(basis: &CMatrix, p: &[f64]) -> CMatrix {
    let mut scaled = basis.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from(p[j]);
    }
    scaled * basis.adjoint()
}

/// ρ_t = U_t π₀ U_t† from `n_steps` midpoint steps over [0, t].
pub fn exact_state(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    t: f64,
    n_steps: usize,
) -> Result<CMatrix, OracleError> {
    if !(t >= 0.0) || n_steps == 0 {
        return Err(OracleError::InvalidArgument(format!(
            "need t >= 0 and n_steps >= 1, got {t}, {n_steps}"
        )));
    }
    let p = super::GibbsState::new(sys.energies().as_slice(), params.beta).populations;
    let pi0 = gibbs_matrix(sys.basis(), &p);
    if t == 0.0 {
        return Ok(pi0);
    }
    let u = propagate(sys, protocol, params.hbar, t, n_steps);
    Ok(&u * pi0 * u.adjoint())
}

/// First-order state deviation `δρ_t = −(i/ħ) ∫₀^t λ_{t'} [V(t'−t), π₀] dt'`
/// (Schrödinger picture, `V(s) = e^{iH₀s/ħ} V e^{−iH₀s/ħ}`), with the time
/// integral done by composite Simpson on `n_steps` intervals.
pub fn lrt_state_deviation(
    sys: &QuantumSystem,
    protocol: &DrivingProtocol,
    params: &ThermalParams,
    t: f64,
    n_steps: usize,
) -> Result<CMatrix, OracleError> {
    if !(t >= 0.0) || n_steps == 0 {
        return Err(OracleError::InvalidArgument(format!(
            "need t >= 0 and n_steps >= 1, got {t}, {n_steps}"
        )));
    }
    let dim = sys.dim();
    let p = super::GibbsState::new(sys.energies().as_slice(), params.beta).populations;
    let v = sys.v_eigenbasis();
    let e = sys.energies();
    let n = n_steps + n_steps % 2;
    let h = t / n as f64;
    let mut d = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            if p[a] == p[b] {
                continue;
            }
            let omega = (e[a] - e[b]) / params.hbar;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=n {
                let s = j as f64 * h;
                let wgt = if j == 0 || j == n {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += Complex64::from_polar(wgt * protocol.lambda(s), omega * (s - t));
            }
            let integral = acc * (h / 3.0);
            d[(a, b)] = Complex64::new(0.0, -1.0 / params.hbar) * (p[b] - p[a]) * v[(a, b)] * integral;
        }
    }
    Ok(sys.basis() * d * sys.basis().adjoint())
}
