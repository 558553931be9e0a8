//! Command-line front end: `run`, `validate`, `analyze`, `mc-bias`,
//! `mc-normality` and `sweep`.
//!
//! Output directory precedence: `--out`, then `ETDE_OUTPUT_DIR`, then the
//! config's `output.dir`. Failures print `{"error": kind, "message": ...}` to
//! stderr and exit nonzero.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::{asymptotic_covariance_report, spectral_condition};
use crate::config::{load_config, Mode, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{communication_stats, log_checkpoints, metrics_report, monte_carlo_bias, monte_carlo_normality};
use crate::output::{write_json, write_plot_data, write_trace_csv, write_triggers_csv, RunSummary, TraceSummary};
use crate::schedules::validate;
use crate::simulation::run_simulation;

pub const OUTPUT_DIR_ENV: &str = "ETDE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "etde", version, about = "Event-triggered distributed parameter estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and write trace, plot data and metrics.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Print the exponent-condition report.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon1: Option<f64>,
    },
    /// Print the gain-matrix spectral condition and the centralized asymptotic covariance.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Centralized gain a_c (defaults to the config's).
        #[arg(long)]
        a_c: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        t_max: usize,
    },
    /// Monte Carlo estimate of the mean error at log-spaced checkpoints.
    McBias {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        /// Comma-separated steps; defaults to log-spaced up to the horizon.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
    },
    /// Monte Carlo covariance of the scaled centralized error against S_c.
    McNormality {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        a_c: f64,
        #[arg(long, default_value_t = 2000)]
        t_eval: usize,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
    },
    /// Vary the threshold exponent over `start:stop:step` and tabulate rate vs error.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: String,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    serde_json::from_value(json!(s.replace('-', "_")))
        .map_err(|_| format!("unknown mode '{s}' (event_triggered, time_driven, always_trigger, centralized, compare)"))
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad grid '{s}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(format!("grid must be start:stop:step, got '{s}'"));
    };
    if !(step > 0.0) || stop < start {
        return Err(format!("grid needs step > 0 and stop >= start, got '{s}'"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

/// One row of the `sweep` table.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub rho: f64,
    pub communication_rate: f64,
    pub mean_final_error: f64,
    pub max_final_error: f64,
}

fn output_dir(common: &Common, config: &SimConfig) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load(common: &Common) -> Result<SimConfig> {
    let (mut config, notices) = load_config(&common.config)?;
    for n in notices {
        eprintln!("notice: {n}");
    }
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    Ok(config)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(std::io::Error::from)?);
    Ok(())
}

fn manifest_entry(path: &Path) -> String {
    path.display().to_string()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { common, mode, horizon } => {
            let mut config = load(&common)?;
            if let Some(mode) = mode {
                config.mode = mode;
            }
            if let Some(h) = horizon {
                config.horizon = h;
            }
            let dir = output_dir(&common, &config)?;
            let started = Instant::now();
            let trace = run_simulation(&config)?;
            let metrics = metrics_report(&trace);
            let mut manifest = Vec::new();
            if config.output.write_trace_csv {
                let p = dir.join("trace.csv");
                write_trace_csv(&trace, &p)?;
                manifest.push(manifest_entry(&p));
                let p = dir.join("triggers.csv");
                write_triggers_csv(&trace, &p)?;
                manifest.push(manifest_entry(&p));
            }
            if config.output.write_plot_data {
                manifest.extend(write_plot_data(&trace, &dir)?.iter().map(|p| manifest_entry(p)));
            }
            let p = dir.join("metrics.json");
            write_json(&metrics, &p)?;
            manifest.push(manifest_entry(&p));
            let p = dir.join("trace.json");
            let summary = TraceSummary {
                config: config.clone(),
                seed: trace.seed,
                stream: trace.stream,
                metrics: metrics.clone(),
            };
            write_json(&summary, &p)?;
            manifest.push(manifest_entry(&p));
            let summary_path = dir.join("summary.json");
            manifest.push(manifest_entry(&summary_path));
            let run = RunSummary {
                seed: trace.seed,
                conditions: validate(&config.schedule),
                config,
                metrics,
                manifest,
                wall_clock_seconds: started.elapsed().as_secs_f64(),
            };
            write_json(&run, &summary_path)?;
            print_json(&json!({
                "seed": run.seed,
                "communication_rate": run.metrics.communication.communication_rate,
                "final_error_norms": run.metrics.final_error_norms,
                "threshold_violations": run.metrics.threshold_violations,
                "wall_clock_seconds": run.wall_clock_seconds,
                "manifest": run.manifest,
            }))
        }
        Command::Validate { common, epsilon1 } => {
            let mut config = load(&common)?;
            if let Some(e) = epsilon1 {
                config.schedule.epsilon1 = e;
            }
            print_json(&validate(&config.schedule))
        }
        Command::Analyze { common, a_c, t_max } => {
            let config = load(&common)?;
            let scenario = config.scenario()?;
            let a_c = a_c.unwrap_or(scenario.centralized_gain);
            let spectral = spectral_condition(&scenario.network, &scenario.system, &scenario.schedule, t_max)?;
            let covariance = asymptotic_covariance_report(&scenario.system, a_c)?;
            print_json(&json!({ "spectral_condition": spectral, "asymptotic_covariance": covariance }))
        }
        Command::McBias { common, runs, checkpoints } => {
            let config = load(&common)?;
            let checkpoints = if checkpoints.is_empty() { log_checkpoints(config.horizon, 9) } else { checkpoints };
            let report = monte_carlo_bias(&config.scenario()?, runs, &checkpoints, config.seed_or_default())?;
            let dir = output_dir(&common, &config)?;
            write_json(&report, &dir.join("mc_bias.json"))?;
            print_json(&report)
        }
        Command::McNormality { common, a_c, t_eval, runs } => {
            let config = load(&common)?;
            let scenario = config.scenario()?;
            let report = monte_carlo_normality(&scenario.system, a_c, t_eval, runs, config.seed_or_default(), None)?;
            let dir = output_dir(&common, &config)?;
            write_json(&report, &dir.join("mc_normality.json"))?;
            print_json(&report)
        }
        Command::Sweep { common, rho } => {
            let config = load(&common)?;
            let grid = parse_grid(&rho).map_err(Error::Parse)?;
            let rows = sweep(&config, &grid)?;
            let dir = output_dir(&common, &config)?;
            let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
            print_json(&rows)
        }
    }
}

/// Event-triggered runs with every `ρ_i` set to each grid value.
pub fn sweep(config: &SimConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&rho| {
            let mut cfg = config.clone();
            cfg.mode = Mode::EventTriggered;
            cfg.schedule.rho = vec![rho; cfg.n_agents()];
            cfg.stride = cfg.horizon.max(1);
            let trace = run_simulation(&cfg)?;
            let errors = &trace.last().error_norms;
            Ok(SweepRow {
                rho,
                communication_rate: communication_stats(&trace).communication_rate,
                mean_final_error: errors.iter().sum::<f64>() / errors.len() as f64,
                max_final_error: errors.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            1
        }
    }
}
