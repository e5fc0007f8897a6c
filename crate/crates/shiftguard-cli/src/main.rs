//! `shiftguard`: level-shift monitoring for autocorrelated time series.
//!
//! Subcommands: `calibrate` (critical-value search), `monitor` (stream
//! charting), `simulate` / `compare` (batch performance studies). Exit
//! codes: 0 success, 1 data errors while monitoring, 2 configuration or
//! model errors, 3 compute-budget errors.

mod calibrate_cmd;
mod config;
mod monitor_cmd;
mod simulate_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::calibrate_cmd::{cmd_calibrate, CalibrateArgs};
use crate::config::RunConfig;
use crate::monitor_cmd::{cmd_monitor, MonitorArgs, OnSignal};
use crate::simulate_cmd::{cmd_simulate, SimulateArgs, StudyChoice};

#[derive(Parser)]
#[command(name = "shiftguard", version, about = "Level-shift control charts for autocorrelated time series")]
struct Cli {
    /// Master seed (overrides the config file; default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for calibration/simulation (0 = automatic)
    #[arg(long, global = true, env = "SHIFTGUARD_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search the chart limit meeting a target in-control ARL
    Calibrate {
        /// Run configuration file (TOML)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Window size K (overrides the config)
        #[arg(long)]
        k: Option<usize>,
        /// Target in-control ARL (default 370.4)
        #[arg(long)]
        target: Option<f64>,
        /// Interval significance level (default 0.05)
        #[arg(long)]
        beta: Option<f64>,
        /// Monte Carlo repetitions (default: derived from --margin)
        #[arg(long)]
        n: Option<usize>,
        /// Interval half-width the repetition count must reach (default 5)
        #[arg(long)]
        margin: Option<f64>,
        /// Additive search step (default 0.05)
        #[arg(long)]
        step: Option<f64>,
        /// Candidate-table CSV path (default calibration.csv)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Ignore an existing candidate table (no warm start)
        #[arg(long)]
        fresh: bool,
    },
    /// Chart a CSV stream (time,value) online
    Monitor {
        /// Run configuration file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Input stream path ("-" = stdin)
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output path ("-" = stdout)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Post-alarm behaviour
        #[arg(long, value_enum, default_value_t = SignalPolicy::Halt)]
        on_signal: SignalPolicy,
    },
    /// Run batch performance studies over a (phi, delta, tuning) grid
    Simulate {
        #[command(flatten)]
        sim: SimFlags,
        /// Which study to run
        #[arg(long, value_enum, default_value_t = Study::All)]
        study: Study,
    },
    /// Shorthand for `simulate --study comparison`
    Compare {
        #[command(flatten)]
        sim: SimFlags,
    },
}

#[derive(clap::Args)]
struct SimFlags {
    /// Named grid preset
    #[arg(long, default_value = "desk")]
    grid: String,
    /// Output directory for study CSVs and the manifest
    #[arg(long, default_value = "studies")]
    out: PathBuf,
    /// Repetitions per cell (overrides the preset)
    #[arg(long)]
    n_reps: Option<usize>,
    /// Repetitions per calibration candidate (overrides the preset)
    #[arg(long)]
    calibration_reps: Option<usize>,
    /// Comma-separated phi grid (overrides the preset)
    #[arg(long, value_delimiter = ',')]
    phi: Option<Vec<f64>>,
    /// Comma-separated delta grid (overrides the preset)
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Comma-separated window-size grid (overrides the preset)
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Ignore calibration caches in the output directory
    #[arg(long)]
    fresh: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalPolicy {
    /// Stop at the first alarm
    Halt,
    /// Reset the chart and keep monitoring
    Reset,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Arl1,
    Accuracy,
    Comparison,
    Robustness,
    All,
}

impl From<Study> for StudyChoice {
    fn from(s: Study) -> Self {
        match s {
            Study::Arl1 => StudyChoice::Arl1,
            Study::Accuracy => StudyChoice::Accuracy,
            Study::Comparison => StudyChoice::Comparison,
            Study::Robustness => StudyChoice::Robustness,
            Study::All => StudyChoice::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = shiftguard::set_global_threads(cli.threads.unwrap_or(0)) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> shiftguard::Result<ExitCode> {
    match cli.command {
        Command::Calibrate {
            config,
            k,
            target,
            beta,
            n,
            margin,
            step,
            output,
            fresh,
        } => {
            let run_config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::default(),
            };
            let args = CalibrateArgs {
                k,
                target,
                beta,
                n,
                margin,
                step,
                output,
                fresh,
            };
            cmd_calibrate(run_config, &args, cli.seed)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Monitor {
            config,
            input,
            output,
            on_signal,
        } => {
            let run_config = RunConfig::load(&config)?;
            let args = MonitorArgs {
                input,
                output,
                on_signal: match on_signal {
                    SignalPolicy::Halt => OnSignal::Halt,
                    SignalPolicy::Reset => OnSignal::Reset,
                },
            };
            let skipped = cmd_monitor(&run_config, &args, cli.seed)?;
            if skipped > 0 {
                eprintln!("{skipped} malformed line(s) skipped");
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Simulate { sim, study } => {
            let args = to_sim_args(sim, study.into());
            cmd_simulate(&args, cli.seed.unwrap_or(0))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { sim } => {
            let args = to_sim_args(sim, StudyChoice::Comparison);
            cmd_simulate(&args, cli.seed.unwrap_or(0))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn to_sim_args(sim: SimFlags, study: StudyChoice) -> SimulateArgs {
    SimulateArgs {
        grid: sim.grid,
        study,
        out: sim.out,
        n_reps: sim.n_reps,
        calibration_reps: sim.calibration_reps,
        phi: sim.phi,
        delta: sim.delta,
        k: sim.k,
        fresh: sim.fresh,
    }
}
