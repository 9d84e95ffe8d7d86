//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (bypassing the harness's capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use workstats::oracle::{
    lrt_benchmark, renyi_identity_suite, PropagatorSettings, QuantumSystem,
};
use workstats::protocol::DrivingProtocol;
use workstats::relaxation::RelaxationModel;
use workstats::statistics::closed_form::{
    bessel_linear_mean, bessel_mean_frequency, bessel_struve_bracket, overdamped_linear_mean,
};
use workstats::statistics::sweep::{fano_sweep, log_grid, SweepRow};
use workstats::statistics::{
    cgf, cumulant, derivative_consistency, fano_factor, jensen_bound, mean_pseudo_frequency,
    StatsConfig, StatsError, ThermalParams,
};

const XS: [f64; 4] = [0.5, 2.0, 5.0, 10.0];
const YS: [f64; 3] = [0.1, 1.0, 10.0];

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance] {n:>2} {verdict} {name}: {detail}\n");
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn models() -> Vec<RelaxationModel> {
    vec![
        RelaxationModel::overdamped(1.0, 1.0).unwrap(),
        RelaxationModel::underdamped(1.0, 1.0, 2.0).unwrap(),
        RelaxationModel::bessel(1.0, 1.0).unwrap(),
    ]
}

/// Every (model, x, y) point of the invariant matrix: γ = β = 1, α = 1.
fn matrix() -> Vec<(RelaxationModel, ThermalParams, DrivingProtocol, f64, f64)> {
    let mut out = Vec::new();
    for m in models() {
        for x in XS {
            for y in YS {
                out.push((
                    m.clone(),
                    ThermalParams::from_x(x, 1.0, 1.0).unwrap(),
                    DrivingProtocol::linear(1.0, y).unwrap(),
                    x,
                    y,
                ));
            }
        }
    }
    out
}

fn scaled_mean(m: &RelaxationModel, y: f64) -> f64 {
    let p = ThermalParams::new(1.0, 1.0).unwrap();
    let proto = DrivingProtocol::linear(1.0, y).unwrap();
    cumulant(1, m, &proto, &p, &StatsConfig::default()).unwrap().value
}

#[test]
fn c01_overdamped_mean_matches_closed_form() {
    let m = RelaxationModel::overdamped(1.0, 1.0).unwrap();
    let worst = log_grid(0.05, 50.0, 20)
        .into_iter()
        .map(|y| (scaled_mean(&m, y) / overdamped_linear_mean(y) - 1.0).abs())
        .fold(0.0, f64::max);
    report(1, "overdamped mean vs closed form", worst <= 1e-6, &format!("max rel err {worst:.2e} over 20 ramp durations"));
}

#[test]
fn c02_bessel_mean_matches_struve_closed_form() {
    let m = RelaxationModel::bessel(1.0, 1.0).unwrap();
    let worst = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0]
        .into_iter()
        .map(|y| (scaled_mean(&m, y) / bessel_linear_mean(y).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let y0 = 1e-3;
    // βκ¹/(α²Ψ₀) = (4/π) × bracket, so the bracket is π/4 of the mean
    let from_closed = bessel_struve_bracket(y0).unwrap();
    let from_quad = 0.25 * PI * scaled_mean(&m, y0);
    let short = (from_closed / (PI / 8.0) - 1.0)
        .abs()
        .max((from_quad / (PI / 8.0) - 1.0).abs());
    report(
        2,
        "Bessel mean vs Struve closed form",
        worst <= 1e-5 && short <= 1e-4,
        &format!("max rel err {worst:.2e}; short-time bracket off pi/8 by {short:.2e}"),
    );
}

#[test]
fn c03_cgf_mirror_symmetry() {
    let cfg = StatsConfig::default();
    let mut worst: f64 = 0.0;
    for (m, p, proto, _, _) in matrix() {
        for i in 1..=9 {
            let eta = i as f64 / 10.0;
            let a = cgf(eta, &m, &proto, &p, &cfg).unwrap().value;
            let b = cgf(1.0 - eta, &m, &proto, &p, &cfg).unwrap().value;
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    report(3, "CGF mirror symmetry", worst <= 1e-9, &format!("max scaled defect {worst:.2e} over 36 points x 9 eta"));
}

#[test]
fn c04_cumulant_positivity() {
    let cfg = StatsConfig::default();
    let (mut negative, mut checked, mut divergent) = (Vec::new(), 0, 0);
    for (m, p, proto, x, y) in matrix() {
        for k in 1..=4 {
            match cumulant(k, &m, &proto, &p, &cfg) {
                Ok(c) => {
                    checked += 1;
                    if c.value < 0.0 {
                        negative.push(format!("{} x={x} y={y} k={k}", m.name()));
                    }
                }
                Err(StatsError::Divergent { .. }) => divergent += 1,
                Err(e) => panic!("{e}"),
            }
        }
    }
    let m = RelaxationModel::overdamped(1.0, 1.0).unwrap();
    let k3 = cumulant(
        3,
        &m,
        &DrivingProtocol::linear(1.0, 1.0).unwrap(),
        &ThermalParams::from_x(5.0, 1.0, 1.0).unwrap(),
        &cfg,
    )
    .unwrap()
    .value;
    report(
        4,
        "cumulant positivity",
        negative.is_empty() && k3 > 0.0,
        &format!("{checked} converged cumulants, {divergent} divergent skipped, negatives {negative:?}; overdamped k3(x=5,y=1) = {k3:.4e}"),
    );
}

#[test]
fn c05_classical_limit() {
    let m = RelaxationModel::overdamped(1.0, 1.0).unwrap();
    let cfg = StatsConfig::default();
    let f = |x: f64, y: f64| {
        let p = ThermalParams::from_x(x, 1.0, 1.0).unwrap();
        let proto = DrivingProtocol::linear(1.0, y).unwrap();
        p.beta * fano_factor(&m, &proto, &p, &cfg).unwrap().ratio
    };
    let (a, b) = (f(0.01, 1.0), f(0.5, 50.0));
    report(
        5,
        "classical limit of the Fano factor",
        (2.0..=2.02).contains(&a) && (b / 2.0 - 1.0).abs() <= 0.05,
        &format!("beta F = {a:.7} at x=0.01,y=1; {b:.5} at x=0.5,y=50"),
    );
}

fn full_sweep() -> Vec<(String, SweepRow, f64)> {
    let cfg = StatsConfig::default();
    let mut out = Vec::new();
    let ps = |beta: f64| -> Vec<ThermalParams> {
        XS.iter().map(|&x| ThermalParams::from_x(x, 1.0, beta).unwrap()).collect()
    };
    let od = RelaxationModel::overdamped(1.0, 1.0).unwrap();
    for r in fano_sweep(&od, &ps(1.0), &log_grid(0.1, 50.0, 40), &cfg) {
        out.push(("overdamped".to_string(), r, 1.0));
    }
    for nu in [2.0, 5.0, 10.0, 15.0] {
        let ud = RelaxationModel::underdamped(1.0, 1.0, nu).unwrap();
        let p = [ThermalParams::from_x(5.0, 1.0, 5.0).unwrap()];
        for r in fano_sweep(&ud, &p, &log_grid(0.01, 10.0, 60), &cfg) {
            out.push((format!("underdamped nu={nu}"), r, 5.0));
        }
    }
    let bs = RelaxationModel::bessel(1.0, 1.0).unwrap();
    for r in fano_sweep(&bs, &ps(1.0), &log_grid(0.01, 100.0, 40), &cfg) {
        out.push(("bessel".to_string(), r, 1.0));
    }
    out
}

#[test]
fn c06_bound_chain() {
    let rows = full_sweep();
    let bad: Vec<String> = rows
        .iter()
        .filter(|(_, r, _)| !(r.beta_fano >= r.beta_bound && r.beta_bound >= 2.0))
        .map(|(n, r, _)| format!("{n} x={} y={}", r.x, r.y))
        .collect();
    let m = RelaxationModel::bessel(1.0, 1.0).unwrap();
    let cfg = StatsConfig::default();
    let worst = log_grid(0.01, 50.0, 30)
        .into_iter()
        .map(|y| {
            let proto = DrivingProtocol::linear(1.0, y).unwrap();
            let q = mean_pseudo_frequency(&m, &proto, &cfg).unwrap().value;
            (q / bessel_mean_frequency(y).unwrap() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    // the bound also checked against the quadrature route at one point
    let p = ThermalParams::from_x(2.0, 1.0, 1.0).unwrap();
    let proto = DrivingProtocol::linear(1.0, 3.0).unwrap();
    let f = fano_factor(&m, &proto, &p, &cfg).unwrap().ratio;
    let j = jensen_bound(&m, &proto, &p, &cfg).unwrap();
    report(
        6,
        "Fano >= zero-point bound >= 2/beta",
        bad.is_empty() && worst <= 1e-8 && f >= j,
        &format!("{} sweep points, violations {bad:?}; Bessel mean-frequency closed form vs quadrature max rel err {worst:.2e}", rows.len()),
    );
}

#[test]
fn c07_figure_shapes() {
    let cfg = StatsConfig::default();
    let od = RelaxationModel::overdamped(1.0, 1.0).unwrap();
    let mut monotone = true;
    for x in XS {
        let p = [ThermalParams::from_x(x, 1.0, 1.0).unwrap()];
        let rows = fano_sweep(&od, &p, &log_grid(0.1, 50.0, 40), &cfg);
        monotone &= rows.windows(2).all(|w| w[1].beta_fano < w[0].beta_fano);
    }
    let ud = RelaxationModel::underdamped(1.0, 1.0, 15.0).unwrap();
    let p = [ThermalParams::from_x(5.0, 1.0, 5.0).unwrap()];
    let rows = fano_sweep(&ud, &p, &log_grid(0.01, 10.0, 60), &cfg);
    let maxima: Vec<f64> = rows
        .windows(3)
        .filter(|w| w[1].beta_fano > w[0].beta_fano && w[1].beta_fano > w[2].beta_fano)
        .map(|w| w[1].y)
        .collect();
    let bs = RelaxationModel::bessel(1.0, 1.0).unwrap();
    let ps: Vec<_> = XS.iter().map(|&x| ThermalParams::from_x(x, 1.0, 1.0).unwrap()).collect();
    let rows = fano_sweep(&bs, &ps, &log_grid(0.01, 100.0, 40), &cfg);
    let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
    let gap_ok = gaps.iter().all(|g| *g >= 0.0);
    let (gmin, gmax) = gaps
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
    report(
        7,
        "figure shapes",
        monotone && !maxima.is_empty() && gap_ok,
        &format!(
            "overdamped strictly decreasing: {monotone}; underdamped local maxima at y = {maxima:.3?}; Bessel relative gap in [{gmin:.2e}, {gmax:.2e}] over {} points",
            gaps.len()
        ),
    );
}

#[test]
fn c08_renyi_tpm_identity() {
    let cases = renyi_identity_suite(2024, 20, &[0.25, 0.5, 0.75], &PropagatorSettings::default()).unwrap();
    let worst = cases.iter().map(|c| c.max_defect).fold(0.0, f64::max);
    let dims: Vec<usize> = cases.iter().map(|c| c.dim).collect();
    report(
        8,
        "Renyi divergence vs TPM generating function",
        worst <= 1e-10 && cases.len() == 20,
        &format!("max defect {worst:.2e} over 20 systems, dims {dims:?}"),
    );
}

#[test]
fn c09_lrt_convergence() {
    let sys = QuantumSystem::preset("qubit-sx").unwrap();
    let proto = DrivingProtocol::linear(0.2, 2.0).unwrap();
    let p = ThermalParams::new(1.0, 1.0).unwrap();
    let run = lrt_benchmark(&sys, &proto, &p, &[0.2, 0.1, 0.05, 0.02], &PropagatorSettings::default()).unwrap();
    let pass = run.scaling.iter().all(|s| s.passed);
    let detail: Vec<String> = run
        .scaling
        .iter()
        .map(|s| {
            format!(
                "k{}: errors {:?}, decreasing {}, observed orders {:.3?}, halving ratios {:.3?}, e(0.02) = {:.2e}",
                s.order,
                s.errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(), s.strictly_decreasing, s.observed_orders, s.halving_ratios, s.final_error
            )
        })
        .collect();
    report(9, "linear-response convergence in alpha", pass, &detail.join("; "));
}

#[test]
fn c10_commuting_gaussianity() {
    let sys = QuantumSystem::preset("qubit-sz-commuting").unwrap();
    let proto = DrivingProtocol::linear(0.02, 2.0).unwrap();
    let p = ThermalParams::new(1.0, 1.0).unwrap();
    let run = lrt_benchmark(&sys, &proto, &p, &[0.02], &PropagatorSettings::default()).unwrap();
    let r = &run.rows[0];
    report(
        10,
        "commuting-limit Gaussianity at alpha = 0.02",
        r.skewness_ratio <= 1e-3 && r.fdr_defect <= 1e-3,
        &format!("|k3|/k1 = {:.3e}, |beta<W> - beta^2 Var/2|/beta<W> = {:.3e}", r.skewness_ratio, r.fdr_defect),
    );
}

#[test]
fn c11_cgf_derivatives_match_cumulants() {
    let cfg = StatsConfig::default();
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (m, p, proto, x, y) in matrix() {
        for c in derivative_consistency(&m, &proto, &p, &cfg).unwrap() {
            worst = worst.max(c.rel_diff);
            if c.rel_diff > 1e-4 {
                failed.push(format!("{} x={x} y={y} k={}", m.name(), c.order));
            }
        }
    }
    report(11, "CGF derivatives vs cumulants", failed.is_empty(), &format!("max rel diff {worst:.2e} over 36 points x 3 orders; failures {failed:?}"));
}

fn run_cli(args: &[&str], config: &Path, out: &Path, seed: &str) -> (i32, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_workstats"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("WORKSTATS_SEED", seed)
        .output()
        .unwrap();
    (status.status.code().unwrap_or(-1), std::fs::read(out).unwrap_or_default())
}

#[test]
fn c12_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("fano-sweep", r#"{"schema_version": 1, "model": {"kind": "underdamped", "psi0": 1, "gamma": 1, "nu": 5},
            "sweep": {"x": [0.5, 5], "y": {"log_min": 0.05, "log_max": 20, "n": 12}}}"#),
        ("cgf", r#"{"schema_version": 1, "model": {"kind": "bessel", "psi0": 1, "gamma": 1},
            "protocol": {"kind": "linear", "alpha": 1, "tau": 2}, "thermal": {"beta": 1, "hbar": 3}}"#),
        ("cumulants", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1},
            "protocol": {"kind": "piecewise_linear", "knots": [[0, 0], [1, 1], [2, 0.5]]}, "thermal": {"beta": 2}}"#),
        ("validate", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 2}}"#),
        ("oracle", r#"{"schema_version": 1, "system": {"preset": "random-gue:42:3"}, "identity_systems": 4,
            "alphas": [0.2, 0.1]}"#),
    ];
    let mut mismatched = Vec::new();
    for (cmd, text) in configs {
        let cfg = dir.path().join(format!("{cmd}.json"));
        std::fs::write(&cfg, text).unwrap();
        let (c1, a) = run_cli(&[cmd, "--jobs", "1"], &cfg, &dir.path().join(format!("{cmd}-a")), "11");
        let (c2, b) = run_cli(&[cmd, "--jobs", "4"], &cfg, &dir.path().join(format!("{cmd}-b")), "11");
        if c1 != 0 || c2 != 0 || a.is_empty() || a != b {
            mismatched.push(format!("{cmd} (exit {c1}/{c2}, {} vs {} bytes)", a.len(), b.len()));
        }
    }
    report(
        12,
        "byte-identical CLI output",
        mismatched.is_empty(),
        &format!("5 commands run twice with different thread counts; mismatches {mismatched:?}"),
    );
}
