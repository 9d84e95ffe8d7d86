mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{check_writable, ConfigError, ExperimentConfig};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "workstats", version, about = "Quantum work statistics in linear response")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides the config's `output`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative quadrature tolerance; overrides the config.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the relaxation model's evenness and spectral positivity.
    Validate,
    /// Fano factor and zero-point bound over the (x, y) grid, as CSV.
    FanoSweep,
    /// CGF and its mirror K(1 − η) on the η grid, as CSV.
    Cgf,
    /// Cumulants by quadrature and from CGF derivatives, as CSV.
    Cumulants,
    /// Exact finite-system benchmark against linear response, as JSON.
    Oracle,
}

enum Failure {
    Usage(String),
    Failed(String),
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)
        .and_then(ExperimentConfig::with_env_seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {t}")));
        }
        cfg.tolerance.rel_tol = Some(t);
    }
    if let Some(p) = &cli.out {
        check_writable(p).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Failed(e.to_string()))?;
    }
    let cfg = load(cli)?;
    let digest = cfg.digest();
    let result = match cli.command {
        Command::Validate => commands::validate(&cfg, &digest),
        Command::FanoSweep => commands::fano_sweep_cmd(&cfg, &digest),
        Command::Cgf => commands::cgf_cmd(&cfg, &digest),
        Command::Cumulants => commands::cumulants_cmd(&cfg, &digest),
        Command::Oracle => commands::oracle_cmd(&cfg, &digest),
    };
    let outcome = result.map_err(|e| match e.downcast_ref::<ConfigError>() {
        Some(c) => Failure::Usage(c.to_string()),
        None => Failure::Failed(format!("{e:#}")),
    })?;
    let target = cli.out.as_deref().or(cfg.output.as_deref());
    output::emit(&outcome.bytes, target).map_err(|e| Failure::Failed(format!("{e:#}")))?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if !outcome.warnings.is_empty() {
        eprintln!("{} warning(s)", outcome.warnings.len());
    }
    if outcome.passed {
        Ok(())
    } else {
        Err(Failure::Failed("checks did not pass".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
