//! Batch front end for the exosuit models.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 runtime
//! simulation error, 4 calibration failure.

mod commands;
mod config;
mod csvio;
mod error;
mod fmt;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::calibrate_muscle::{self, CalibrateMuscleArgs};
use commands::calibrate_sensor::{self, CalibrateSensorArgs};
use commands::emg::{self, EmgArgs};
use commands::simulate::{self, SimulateArgs};
use commands::sweep::{self, SweepArgs};

#[derive(Parser)]
#[command(
    name = "exosim",
    version,
    about = "Closed-loop lift simulation and calibration tools for a hydraulic back-assist exosuit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config file (TOML); defaults to the bundled scenario.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// RNG seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Emit SVG plots (the default).
    #[arg(long, global = true, overrides_with = "no_plot")]
    plot: bool,

    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured closed-loop lift scenario.
    Simulate {
        /// Run loaded/unloaded crossed with assist on/off.
        #[arg(long)]
        four_scenario: bool,
    },
    /// Fit the sensor loop geometry to `strain,pressure_Pa` samples.
    CalibrateSensor {
        /// CSV of measured samples.
        data: PathBuf,
        /// Iteration cap for the fit.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Also fit a strain response offset.
        #[arg(long)]
        fit_strain_offset: bool,
    },
    /// Fit the muscle elastic term to `elongation_m,force_N` samples.
    CalibrateMuscle {
        /// CSV of measured samples.
        data: PathBuf,
    },
    /// Compare an assist/no-assist EMG pair and compute the efficiency.
    Emg {
        /// CSV of the assisted recording (`t,emg`).
        assist: PathBuf,
        /// CSV of the unassisted recording (`t,emg`).
        no_assist: PathBuf,
        /// Override the sample rate inferred from the time column.
        #[arg(long)]
        sample_rate_hz: Option<f64>,
    },
    /// Re-run the scenario across a range of one scalar parameter.
    Sweep {
        /// One of: load_mass, moment_arm, f_max, threshold.
        parameter: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Range start (with --stop and --steps).
        #[arg(long)]
        start: Option<f64>,
        /// Range end, inclusive.
        #[arg(long)]
        stop: Option<f64>,
        /// Number of evenly spaced points.
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let plot = !cli.no_plot;
    let result = match cli.command {
        Command::Simulate { four_scenario } => simulate::run(SimulateArgs {
            config: cli.config,
            out: cli.out,
            seed: cli.seed,
            four_scenario,
            plot,
        }),
        Command::CalibrateSensor { data, max_iterations, fit_strain_offset } => {
            calibrate_sensor::run(CalibrateSensorArgs {
                data,
                config: cli.config,
                out: cli.out,
                max_iterations,
                fit_strain_offset,
                plot,
            })
        }
        Command::CalibrateMuscle { data } => calibrate_muscle::run(CalibrateMuscleArgs {
            data,
            config: cli.config,
            out: cli.out,
            plot,
        }),
        Command::Emg { assist, no_assist, sample_rate_hz } => emg::run(EmgArgs {
            assist,
            no_assist,
            sample_rate_hz,
            out: cli.out,
            plot,
        }),
        Command::Sweep { parameter, values, start, stop, steps } => sweep::run(SweepArgs {
            parameter,
            values,
            start,
            stop,
            steps,
            config: cli.config,
            out: cli.out,
            plot,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
