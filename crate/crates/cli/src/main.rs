//! `tclplus`: runs the term expansion, model simulations and series
//! convergence studies, writing CSV/JSON files plus a manifest per run.
//!
//! Exit codes: 0 on success (including recorded divergences), 2 for usage or
//! configuration errors, 1 for internal failures.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use tclplus_core::convergence::{single_matrix_curves, threshold_sweep};
use tclplus_core::expansion::{expand_neumann_terms, expand_pinv_terms, term_tables, TermTable};
use tclplus_core::ising::{run_ising, DEFAULT_COUPLING_SEED};
use tclplus_core::jc::run_jc;
use tclplus_core::Error;

use config::{IsingSimulation, JcSimulation, SingleConfig, SweepConfig};
use output::{csv, write_atomic, Divergence, RunManifest};

/// Largest order accepted by `expand`.
const MAX_EXPAND_ORDER: usize = 10;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidOrder { .. } | Error::CapacityError(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tclplus", version, about = "TCL and TCL+ master equation experiments")]
struct Cli {
    /// Seed for randomized inputs (Ising couplings, sweep ensembles).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for all output files; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-order term tables of the TCL or TCL+ generator.
    Expand {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=MAX_EXPAND_ORDER as u64))]
        order: u64,
        #[arg(long, value_enum)]
        method: ExpandMethod,
    },
    /// Trajectories for the Jaynes-Cummings or Ising model.
    Simulate {
        #[arg(value_enum)]
        model: Model,
        /// JSON config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Depth-constant sweep or error curves for one matrix.
    Convergence {
        #[arg(value_enum)]
        mode: Mode,
        /// JSON config; required for `single`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExpandMethod {
    Tcl,
    Tclplus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Jc,
    Ising,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Sweep,
    Single,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| {
        CliError::Usage(format!("cannot create {}: {e}", cli.out_dir.display()))
    })?;
    let start = Instant::now();
    let written = match &cli.command {
        Command::Expand { order, method } => expand(cli, *order as usize, *method, start)?,
        Command::Simulate { model: Model::Jc, config } => simulate_jc(cli, config.as_deref(), start)?,
        Command::Simulate { model: Model::Ising, config } => {
            simulate_ising(cli, config.as_deref(), start)?
        }
        Command::Convergence { mode: Mode::Sweep, config } => sweep(cli, config.as_deref(), start)?,
        Command::Convergence { mode: Mode::Single, config } => {
            let path = config
                .as_deref()
                .ok_or_else(|| CliError::Usage("convergence single needs --config".into()))?;
            single(cli, path, start)?
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn load_or_default<T>(path: Option<&Path>) -> Result<T, CliError>
where
    T: serde::de::DeserializeOwned + Serialize + config::Versioned + Default,
{
    match path {
        Some(p) => config::load(p),
        None => {
            let mut value = serde_json::to_value(T::default())
                .map_err(|e| CliError::Internal(e.to_string()))?;
            value["schema_version"] = config::SCHEMA_VERSION.into();
            serde_json::from_value(value).map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

/// Writes outputs and the manifest; returns every path written.
fn finish<C: Serialize>(
    cli: &Cli,
    name: &str,
    mut manifest: RunManifest<C>,
    files: Vec<(PathBuf, String)>,
    start: Instant,
) -> Result<Vec<PathBuf>, CliError> {
    for (path, text) in &files {
        write_atomic(path, text.as_bytes())?;
        manifest.outputs.push(path.clone());
    }
    let mut written: Vec<PathBuf> = files.into_iter().map(|(p, _)| p).collect();
    written.push(manifest.write(&cli.out_dir, name, start.elapsed())?);
    Ok(written)
}

#[derive(Serialize)]
struct ExpandConfig {
    order: usize,
    method: ExpandMethod,
}

#[derive(Serialize)]
struct TermFile {
    method: ExpandMethod,
    max_order: usize,
    orders: Vec<TermTable>,
}

fn expand(cli: &Cli, order: usize, method: ExpandMethod, start: Instant) -> Result<Vec<PathBuf>, CliError> {
    let polys = match method {
        ExpandMethod::Tcl => expand_neumann_terms(order)?,
        ExpandMethod::Tclplus => expand_pinv_terms(order)?,
    };
    let file = TermFile {
        method,
        max_order: order,
        orders: term_tables(&polys),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| CliError::Internal(e.to_string()))?;
    let tag = match method {
        ExpandMethod::Tcl => "tcl",
        ExpandMethod::Tclplus => "tclplus",
    };
    let name = format!("terms_{tag}_order{order}");
    let path = cli.out_dir.join(format!("{name}.json"));
    let manifest = RunManifest::new("expand", ExpandConfig { order, method }, cli.seed);
    finish(cli, &name, manifest, vec![(path, text)], start)
}

fn simulate_jc(cli: &Cli, path: Option<&Path>, start: Instant) -> Result<Vec<PathBuf>, CliError> {
    let cfg: JcSimulation = load_or_default(path)?;
    let runs = cfg.runs()?;
    let results: Vec<_> = runs
        .par_iter()
        .map(|(m, d, core)| run_jc(core).map(|traj| (*m, *d, traj)))
        .collect::<Result<_, _>>()?;
    let mut manifest = RunManifest::new("simulate jc", cfg, cli.seed);
    let mut files = Vec::new();
    for (m, d, traj) in results {
        let path = cli.out_dir.join(format!("jc_{m}_dim{d}.csv"));
        if let Some(time) = traj.diverged_at {
            manifest.divergences.push(Divergence { file: path.clone(), time });
        }
        let rows = (0..traj.times.len()).map(|i| {
            let coh = traj.coherence[i];
            vec![traj.times[i], traj.rho11[i], coh.re, coh.im]
        });
        files.push((path, csv(&["t", "rho11", "re_rho01", "im_rho01"], rows)));
    }
    finish(cli, "simulate_jc", manifest, files, start)
}

fn simulate_ising(cli: &Cli, path: Option<&Path>, start: Instant) -> Result<Vec<PathBuf>, CliError> {
    let seed = cli.seed.unwrap_or(DEFAULT_COUPLING_SEED);
    let cfg = load_or_default::<IsingSimulation>(path)?.resolved(seed);
    let runs = cfg.runs()?;
    let results: Vec<_> = runs
        .par_iter()
        .map(|(m, core)| run_ising(core).map(|traj| (*m, traj)))
        .collect::<Result<_, _>>()?;
    let mut manifest = RunManifest::new("simulate ising", cfg, Some(seed));
    let mut files = Vec::new();
    for (m, traj) in results {
        let path = cli.out_dir.join(format!("ising_{m}.csv"));
        let finite = |i: usize| traj.vx[i].is_finite() && traj.vy[i].is_finite();
        let len = (0..traj.times.len()).find(|&i| !finite(i)).unwrap_or(traj.times.len());
        if len < traj.times.len() {
            log::warn!("{m}: non-finite Bloch vector at t = {}", traj.times[len]);
            manifest.divergences.push(Divergence { file: path.clone(), time: traj.times[len] });
        }
        let rows = (0..len).map(|i| vec![traj.times[i], traj.vx[i], traj.vy[i], traj.vz[i]]);
        files.push((path, csv(&["t", "vx", "vy", "vz"], rows)));
    }
    finish(cli, "simulate_ising", manifest, files, start)
}

fn sweep(cli: &Cli, path: Option<&Path>, start: Instant) -> Result<Vec<PathBuf>, CliError> {
    let cfg: SweepConfig = load_or_default(path)?;
    let seed = cli.seed.unwrap_or(0);
    let rows = threshold_sweep(&cfg.settings(seed))?;
    let header = [
        "norm",
        "tau_neumann_mean",
        "tau_pinv_mean",
        "tau_neumann_std",
        "tau_pinv_std",
        "neumann_trials",
        "pinv_trials",
        "singular_excluded",
        "unfit_excluded",
    ];
    let text = csv(
        &header,
        rows.iter().map(|r| {
            vec![
                r.norm,
                r.tau_neumann_mean,
                r.tau_pinv_mean,
                r.tau_neumann_std,
                r.tau_pinv_std,
                r.neumann_trials as f64,
                r.pinv_trials as f64,
                r.singular_excluded as f64,
                r.unfit_excluded as f64,
            ]
        }),
    );
    let manifest = RunManifest::new("convergence sweep", cfg, Some(seed));
    let out = cli.out_dir.join("convergence_sweep.csv");
    finish(cli, "convergence_sweep", manifest, vec![(out, text)], start)
}

fn single(cli: &Cli, path: &Path, start: Instant) -> Result<Vec<PathBuf>, CliError> {
    let cfg: SingleConfig = config::load(path)?;
    let sigma = cfg.matrix.to_matrix()?;
    if !sigma.is_square() {
        return Err(CliError::Usage("matrix must be square".into()));
    }
    let curves = single_matrix_curves(&sigma, cfg.max_depth)?;
    let rows = (0..curves.depths.len())
        .map(|i| vec![curves.depths[i] as f64, curves.neumann[i], curves.pinv[i]]);
    let text = csv(&["depth", "err_neumann", "err_pinv"], rows);
    let mut manifest = RunManifest::new("convergence single", cfg, cli.seed);
    if curves.neumann_is_partial_sum_norm {
        manifest
            .notes
            .push("I - Sigma is singular: err_neumann holds partial-sum norms".into());
    }
    let out = cli.out_dir.join("convergence_single.csv");
    finish(cli, "convergence_single", manifest, vec![(out, text)], start)
}
