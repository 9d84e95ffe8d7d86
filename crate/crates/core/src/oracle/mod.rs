//! Exact finite-dimensional quantum mechanics for checking the linear-response
//! results: two-point-measurement work statistics, Rényi-divergence CGF,
//! spectral relaxation functions and generalised covariances.

mod benchmark;
mod dynamics;
mod spectral;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::ProtocolError;
use crate::statistics::{StatsError, ThermalParams};

pub use benchmark::{
    evans_searles_defect, lrt_benchmark, renyi_identity_suite, BenchmarkRow, IdentityCase,
    LrtBenchmark, ScalingCheck,
};
pub use dynamics::{
    converged_propagator, exact_state, lrt_state_deviation, propagator, renyi_cgf,
    tpm_distribution, PropagatorSettings, TpmDistribution,
};
pub use spectral::{
    generalized_covariance, lrt_cgf, lrt_cgf_time_domain, lrt_cumulant, relaxation_exact,
    spectral_components, SpectralComponent,
};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const COMMUTING_TOL: f64 = 1e-12;
pub const MAX_DIM: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("propagator not converged after {steps} steps (max change {change:e})")]
    NotConverged { steps: usize, change: f64 },
    #[error("state too close to rank deficient for double precision: eigenvalue ratio {ratio:e}")]
    Precision { ratio: f64 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A Hamiltonian H₀ and a perturbation V with unit operator norm.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    h0: CMatrix,
    v: CMatrix,
    energies: DVector<f64>,
    // columns are eigenvectors of H₀, energies ascending
    basis: CMatrix,
    commuting: bool,
}

/// A system as written in JSON: a named preset or dense matrices of
/// `[re, im]` pairs, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Preset { preset: String },
    Matrices {
        h0: Vec<Vec<[f64; 2]>>,
        v: Vec<Vec<[f64; 2]>>,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<QuantumSystem, OracleError> {
        match self {
            SystemSpec::Preset { preset } => QuantumSystem::preset(preset),
            SystemSpec::Matrices { h0, v } => QuantumSystem::new(dense(h0)?, dense(v)?),
        }
    }
}

fn dense(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, OracleError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(OracleError::InvalidSystem(format!(
            "matrix must be square, got {n} rows of lengths {:?}",
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm of a Hermitian matrix.
fn hermitian_norm(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |a: f64, e| a.max(e.abs()))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub(crate) fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| e.eigenvalues[i]));
    let vecs = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| e.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

impl QuantumSystem {
    /// Validates hermiticity and rescales `v` to unit operator norm.
    pub fn new(h0: CMatrix, v: CMatrix) -> Result<Self, OracleError> {
        let dim = h0.nrows();
        if !(2..=MAX_DIM).contains(&dim) || h0.ncols() != dim || v.shape() != (dim, dim) {
            return Err(OracleError::InvalidSystem(format!(
                "need square matrices of equal dimension 2..={MAX_DIM}, got {:?} and {:?}",
                h0.shape(),
                v.shape()
            )));
        }
        if h0.iter().chain(v.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OracleError::InvalidSystem("non-finite matrix entry".into()));
        }
        for (name, m) in [("h0", &h0), ("v", &v)] {
            let d = hermiticity_defect(m);
            if d > HERMITIAN_TOL {
                return Err(OracleError::InvalidSystem(format!(
                    "{name} is not Hermitian (defect {d:e})"
                )));
            }
        }
        // symmetrise away sub-tolerance asymmetry
        let h0 = (&h0 + h0.adjoint()).scale(0.5);
        let v = (&v + v.adjoint()).scale(0.5);
        let norm = hermitian_norm(&v);
        if norm == 0.0 {
            return Err(OracleError::InvalidSystem("V must be nonzero".into()));
        }
        let v = v.unscale(norm);
        let commutator = &h0 * &v - &v * &h0;
        let commuting = commutator.iter().map(|z| z.norm()).fold(0.0, f64::max) < COMMUTING_TOL;
        let (energies, basis) = eigh(&h0);
        Ok(QuantumSystem {
            h0,
            v,
            energies,
            basis,
            commuting,
        })
    }

    /// `qubit-sx`, `qubit-sz-commuting` or `random-gue:<seed>:<dim>`.
    pub fn preset(name: &str) -> Result<Self, OracleError> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let z = c(0.0, 0.0);
        let sx = CMatrix::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z]);
        let sz = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(-1.0, 0.0)]);
        match name {
            "qubit-sx" => QuantumSystem::new(sz.scale(0.5), sx),
            "qubit-sz-commuting" => QuantumSystem::new(sz.clone(), sz),
            _ => {
                let parts: Vec<&str> = name.split(':').collect();
                match parts.as_slice() {
                    ["random-gue", seed, dim] => {
                        let seed = seed.parse::<u64>().map_err(|e| {
                            OracleError::InvalidSystem(format!("bad seed in {name:?}: {e}"))
                        })?;
                        let dim = dim.parse::<usize>().map_err(|e| {
                            OracleError::InvalidSystem(format!("bad dimension in {name:?}: {e}"))
                        })?;
                        QuantumSystem::random_gue(seed, dim)
                    }
                    _ => Err(OracleError::InvalidSystem(format!(
                        "unknown preset {name:?}; expected qubit-sx, qubit-sz-commuting or random-gue:<seed>:<dim>"
                    ))),
                }
            }
        }
    }

    /// H₀ and V drawn independently from the GUE, both scaled to unit norm.
    pub fn random_gue(seed: u64, dim: usize) -> Result<Self, OracleError> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(OracleError::InvalidSystem(format!(
                "dimension must be in 2..={MAX_DIM}, got {dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gue = || {
            let a = CMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let h = (&a + a.adjoint()).scale(0.5);
            let n = hermitian_norm(&h);
            h.unscale(n)
        };
        let h0 = gue();
        let v = gue();
        QuantumSystem::new(h0, v)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// Eigenvalues of H₀, ascending.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Eigenvectors of H₀ as columns, matching [`Self::energies`].
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    /// H₀ + λV.
    pub fn hamiltonian(&self, lambda: f64) -> CMatrix {
        &self.h0 + self.v.scale(lambda)
    }

    /// V in the eigenbasis of H₀.
    pub(crate) fn v_eigenbasis(&self) -> CMatrix {
        self.basis.adjoint() * &self.v * &self.basis
    }

    /// Spread of the energy scales involved, for relative tolerances.
    pub(crate) fn energy_scale(&self) -> f64 {
        let n = self.energies.len();
        (self.energies[n - 1] - self.energies[0]).max(1.0)
    }
}

/// Gibbs weights and free energy of a spectrum, computed stably.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsState {
    pub populations: Vec<f64>,
    /// ln Z.
    pub log_z: f64,
}

impl GibbsState {
    pub fn new(energies: &[f64], beta: f64) -> Self {
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
        let s: f64 = w.iter().sum();
        GibbsState {
            populations: w.iter().map(|x| x / s).collect(),
            log_z: s.ln() - beta * e_min,
        }
    }
}

/// Equilibrium data before and after the drive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalStateData {
    pub initial: GibbsState,
    pub final_energies: Vec<f64>,
    pub final_state: GibbsState,
    /// ΔF = −β⁻¹ ln(Z_τ/Z₀).
    pub delta_f: f64,
}

impl ThermalStateData {
    pub fn new(sys: &QuantumSystem, lambda_final: f64, params: &ThermalParams) -> Self {
        let beta = params.beta;
        let initial = GibbsState::new(sys.energies.as_slice(), beta);
        let (final_energies, _) = eigh(&sys.hamiltonian(lambda_final));
        let final_state = GibbsState::new(final_energies.as_slice(), beta);
        let delta_f = -(final_state.log_z - initial.log_z) / beta;
        ThermalStateData {
            initial,
            final_energies: final_energies.iter().copied().collect(),
            final_state,
            delta_f,
        }
    }
}
