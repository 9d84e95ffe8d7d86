use anyhow::Result;
use serde::Serialize;

use workstats::oracle::{
    lrt_benchmark, renyi_identity_suite, IdentityCase, LrtBenchmark, PropagatorSettings,
};
use workstats::protocol::DrivingProtocol;
use workstats::relaxation::{default_omega_grid, RelaxationModel, ValidationReport};
use workstats::statistics::sweep::fano_sweep;
use workstats::statistics::{cgf, cumulant, cumulant_from_cgf, StatsError, ThermalParams};

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{num, render_json, CsvTable};

/// Identity checks must agree to this absolute tolerance.
pub const IDENTITY_TOL: f64 = 1e-10;
const VALIDATION_GRID_POINTS: usize = 4000;
const VALIDATION_SPAN: f64 = 200.0;

/// What a command produced and whether its checks passed.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub passed: bool,
    pub warnings: Vec<String>,
}

fn invalid(path: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Schema {
        path: path.to_string(),
        message: e.to_string(),
    }
}

fn model(cfg: &ExperimentConfig) -> Result<RelaxationModel, ConfigError> {
    let spec = ExperimentConfig::require(&cfg.model, "model")?;
    RelaxationModel::try_from(spec.clone()).map_err(|e| invalid("model", e))
}

fn protocol(cfg: &ExperimentConfig) -> Result<DrivingProtocol, ConfigError> {
    let spec = ExperimentConfig::require(&cfg.protocol, "protocol")?;
    DrivingProtocol::try_from(spec.clone()).map_err(|e| invalid("protocol", e))
}

fn thermal(cfg: &ExperimentConfig) -> Result<ThermalParams, ConfigError> {
    ExperimentConfig::require(&cfg.thermal, "thermal").copied()
}

pub fn validate(cfg: &ExperimentConfig, digest: &str) -> Result<Outcome> {
    let m = model(cfg)?;
    let report: ValidationReport =
        m.validate(&default_omega_grid(&m, VALIDATION_GRID_POINTS, VALIDATION_SPAN));
    let mut warnings = Vec::new();
    if let Some(v) = &report.positivity_violation {
        warnings.push(format!(
            "spectral density negative at omega = {:e} (value {:e})",
            v.at, v.value
        ));
    }
    if let Some(v) = &report.evenness_violation {
        warnings.push(format!("relaxation function not even at t = {:e}", v.at));
    }
    Ok(Outcome {
        passed: report.passed,
        bytes: render_json(digest, &report)?,
        warnings,
    })
}

pub fn fano_sweep_cmd(cfg: &ExperimentConfig, digest: &str) -> Result<Outcome> {
    let m = model(cfg)?;
    let sweep = ExperimentConfig::require(&cfg.sweep, "sweep")?;
    let params = sweep
        .x
        .points()
        .iter()
        .map(|&x| ThermalParams::from_x(x, m.gamma(), sweep.beta))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid("sweep", e))?;
    let rows = fano_sweep(&m, &params, &sweep.y.points(), &cfg.stats_config());
    let mut table = CsvTable::new(&[
        "x",
        "y",
        "beta_fano",
        "beta_jensen_bound",
        "beta_avg_rescaled",
        "err_est",
        "flag",
    ]);
    let mut warnings = Vec::new();
    for r in &rows {
        if let Some(f) = &r.flag {
            if r.beta_fano.is_nan() {
                warnings.push(format!("x = {}, y = {}: {f}", r.x, r.y));
            }
        }
        table.push(vec![
            num(r.x),
            num(r.y),
            num(r.beta_fano),
            num(r.beta_bound),
            num(r.scaled_mean),
            num(r.err_estimate),
            r.flag.clone().unwrap_or_default(),
        ]);
    }
    Ok(Outcome {
        bytes: table.render(digest)?,
        passed: true,
        warnings,
    })
}

pub fn cgf_cmd(cfg: &ExperimentConfig, digest: &str) -> Result<Outcome> {
    let (m, p, t) = (model(cfg)?, protocol(cfg)?, thermal(cfg)?);
    let sc = cfg.stats_config();
    let mut table = CsvTable::new(&["eta", "K", "K_mirror", "defect"]);
    let mut min: Option<(f64, f64)> = None;
    for &eta in &cfg.eta_grid {
        let k = cgf(eta, &m, &p, &t, &sc)?.value;
        let km = cgf(1.0 - eta, &m, &p, &t, &sc)?.value;
        if min.is_none_or(|(_, v)| k < v) {
            min = Some((eta, k));
        }
        table.push(vec![num(eta), num(k), num(km), num((k - km).abs())]);
    }
    let mut warnings = Vec::new();
    if let Some((eta, _)) = min {
        if cfg.eta_grid.contains(&0.5) && eta != 0.5 {
            warnings.push(format!("grid minimum of K at eta = {eta}, not at 0.5"));
        }
    }
    Ok(Outcome {
        bytes: table.render(digest)?,
        passed: true,
        warnings,
    })
}

pub fn cumulants_cmd(cfg: &ExperimentConfig, digest: &str) -> Result<Outcome> {
    let (m, p, t) = (model(cfg)?, protocol(cfg)?, thermal(cfg)?);
    let sc = cfg.stats_config();
    let mut table = CsvTable::new(&["order", "kappa", "err_est", "kappa_from_cgf", "rel_diff", "status"]);
    let mut passed = true;
    for &k in &cfg.cumulant_orders {
        match cumulant(k, &m, &p, &t, &sc) {
            Ok(c) => {
                let (d, rel) = if k <= 4 {
                    let d = cumulant_from_cgf(k, &m, &p, &t, &sc)?;
                    (d, (d - c.value).abs() / c.value.abs())
                } else {
                    (f64::NAN, f64::NAN)
                };
                let status = if k <= 3 && rel > sc.derivative.rel_tol {
                    passed = false;
                    "derivative_mismatch"
                } else {
                    "ok"
                };
                table.push(vec![
                    k.to_string(),
                    num(c.value),
                    num(c.err_estimate),
                    num(d),
                    num(rel),
                    status.into(),
                ]);
            }
            Err(StatsError::Divergent { .. }) => table.push(vec![
                k.to_string(),
                num(f64::INFINITY),
                num(f64::NAN),
                num(f64::NAN),
                num(f64::NAN),
                "divergent".into(),
            ]),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        bytes: table.render(digest)?,
        passed,
        warnings: Vec::new(),
    })
}

#[derive(Serialize)]
struct IdentitySummary {
    seed: u64,
    cases: Vec<IdentityCase>,
    max_defect: f64,
    passed: bool,
}

#[derive(Serialize)]
struct OracleReport {
    benchmark: LrtBenchmark,
    identity: IdentitySummary,
}

pub fn oracle_cmd(cfg: &ExperimentConfig, digest: &str) -> Result<Outcome> {
    let spec = ExperimentConfig::require(&cfg.system, "system")?;
    let sys = spec.build().map_err(|e| invalid("system", e))?;
    let base = match &cfg.protocol {
        Some(_) => protocol(cfg)?,
        None => DrivingProtocol::linear(cfg.alphas[0], 2.0)?,
    };
    let t = cfg.thermal.unwrap_or(ThermalParams::new(1.0, 1.0)?);
    let settings = PropagatorSettings::default();
    let benchmark = lrt_benchmark(&sys, &base, &t, &cfg.alphas, &settings)?;
    let cases = renyi_identity_suite(cfg.seed, cfg.identity_systems, &[0.25, 0.5, 0.75], &settings)?;
    let max_defect = cases.iter().map(|c| c.max_defect).fold(0.0, f64::max);
    let bench_ok = benchmark
        .max_identity_defect
        .is_some_and(|d| d <= IDENTITY_TOL);
    let identity = IdentitySummary {
        seed: cfg.seed,
        passed: max_defect <= IDENTITY_TOL,
        max_defect,
        cases,
    };
    let mut warnings = Vec::new();
    for s in benchmark.scaling.iter().filter(|s| !s.passed) {
        warnings.push(format!(
            "order {} error scaling outside the first-order window: halving ratios {:?}",
            s.order, s.halving_ratios
        ));
    }
    for r in benchmark.rows.iter().filter_map(|r| r.note.as_ref()) {
        warnings.push(r.clone());
    }
    let passed = bench_ok && identity.passed;
    let out = Outcome {
        bytes: render_json(digest, OracleReport { benchmark, identity })?,
        passed,
        warnings,
    };
    Ok(out)
}
