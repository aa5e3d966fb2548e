//! Command-line front end for the coexistence simulator.
//!
//! Subcommands:
//!
//! - `simulate` runs the Monte Carlo sweep side by side with the analytic
//!   model and writes one CSV row per (sweep point, metric);
//! - `analytic-only` writes the same rows with the simulation columns left
//!   empty;
//! - `areas` dumps the mean sensing-area table the access model uses.
//!
//! Scenarios come from a built-in preset (`--preset`) or a TOML file
//! (`--config`). Exit codes: 0 success, 2 configuration error, 3 runtime
//! failure (including a sweep whose every point failed), 4 i/o failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use coexsim_cli::csvio::{emit_csv, write_csv};
use coexsim_cli::error::CliError;
use coexsim_cli::scenario::{load_preset, load_scenario_file, Mode, Scenario, PRESET_NAMES};
use coexsim_cli::sweep::{areas_table, run_sweep, RunOptions};

/// Environment variable bounding the simulation worker pool.
const WORKERS_ENV: &str = "COEXSIM_WORKERS";

#[derive(Parser)]
#[command(
    name = "coexsim",
    version,
    about = "Stochastic-geometry simulator for multi-tier spectrum coexistence",
    after_help = preset_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep alongside the analytic model.
    Simulate(RunArgs),
    /// Evaluate only the analytic columns (no sampling).
    AnalyticOnly(RunArgs),
    /// Print the mean sensing-area table (m^2) for a scenario.
    Areas(SourceArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Built-in preset name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Scenario description file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Override the number of Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the root random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the metric list (comma separated).
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Override the association mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Record wall-clock seconds per sweep point (breaks byte-identical
    /// reruns).
    #[arg(long)]
    timings: bool,
}

fn preset_help() -> String {
    format!("Presets: {}", PRESET_NAMES.join(", "))
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    init_worker_pool()?;
    match cli.command {
        Command::Simulate(args) => run_sweep_command(args, true),
        Command::AnalyticOnly(args) => run_sweep_command(args, false),
        Command::Areas(source) => run_areas(&source),
    }
}

/// Size the global worker pool from the environment, when asked.
fn init_worker_pool() -> Result<(), CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(val) => {
            let workers: usize = val.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::config(format!(
                    "{WORKERS_ENV} must be a positive integer: got {val:?}"
                ))
            })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global()
                .map_err(|e| CliError::runtime(format!("worker pool: {e}")))
        }
        Err(_) => Ok(()),
    }
}

fn load(source: &SourceArgs) -> Result<Scenario, CliError> {
    match (&source.preset, &source.config) {
        (Some(name), None) => load_preset(name),
        (None, Some(path)) => load_scenario_file(path),
        _ => unreachable!("argument parsing enforces exactly one scenario source"),
    }
}

fn run_sweep_command(args: RunArgs, simulate: bool) -> Result<i32, CliError> {
    let mut scenario = load(&args.source)?;
    if let Some(trials) = args.trials {
        scenario.sim.trials = trials;
    }
    if let Some(seed) = args.seed {
        scenario.sim.seed = seed;
    }
    if let Some(metrics) = &args.metrics {
        scenario.metrics = metrics.clone();
    }
    if let Some(mode) = args.mode {
        scenario.mode = mode;
    }

    let options = RunOptions {
        simulate,
        timings: args.timings,
    };
    let outcome = run_sweep(&scenario, &options)?;
    for failure in &outcome.failures {
        eprintln!(
            "warning: sweep point {}: {}",
            failure.sweep_value, failure.message
        );
    }

    match &args.out {
        Some(path) => write_csv(path, &outcome.rows)?,
        None => print!("{}", emit_csv(&outcome.rows)),
    }

    // A sweep survives partial failures, but a run where no point produced
    // any value is a failure outright.
    let mut point_has_data = std::collections::BTreeMap::new();
    for row in &outcome.rows {
        let has_data = row.mc_estimate.is_some()
            || row.analytic_bound.is_some()
            || row.analytic_limit.is_some();
        *point_has_data.entry(row.sweep_value.to_bits()).or_insert(false) |= has_data;
    }
    let all_dead = !point_has_data.is_empty() && point_has_data.values().all(|ok| !ok);
    Ok(if all_dead { 3 } else { 0 })
}

fn run_areas(source: &SourceArgs) -> Result<i32, CliError> {
    let scenario = load(source)?;
    let table = areas_table(&scenario)?;
    let mut out = String::from("serving_tier,interferer_tier,mean_area_m2\n");
    for (k, row) in table.a.iter().enumerate() {
        for (m, area) in row.iter().enumerate() {
            let _ = writeln!(out, "{},{},{area:.8e}", k + 1, m + 1);
        }
    }
    print!("{out}");
    Ok(0)
}
