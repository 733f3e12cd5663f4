//! `exosim sweep`: run the configured scenario across a range of one
//! scalar parameter and tabulate peaks and assist reduction per point.
//!
//! Points are independent, so they evaluate in parallel; rows land in
//! the CSV ordered by parameter value regardless of completion order.

use std::path::PathBuf;

use exosim_core::control::{reduction_percent, Scenario};
use rayon::prelude::*;

use crate::commands::simulate::{run_with_baseline, RunStats};
use crate::config::LoadedConfig;
use crate::csvio::{render_sweep, write_file};
use crate::error::CliError;
use crate::plot::{line_chart, Series};
use crate::report::{prepare_out_dir, resolve_out_dir, Report};

pub struct SweepArgs {
    pub parameter: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: Option<usize>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

const PARAMETERS: [&str; 4] = ["load_mass", "moment_arm", "f_max", "threshold"];

fn apply(scenario: &Scenario, parameter: &str, value: f64) -> Result<Scenario, CliError> {
    let mut s = scenario.clone();
    match parameter {
        "load_mass" => s.load_mass = value,
        "moment_arm" => s.controller.moment_arm = value,
        "f_max" => s.controller.f_max = value,
        "threshold" => s.controller.threshold = value,
        other => {
            return Err(CliError::input(format!(
                "unknown sweep parameter `{other}`; recognized: {}",
                PARAMETERS.join(", ")
            )))
        }
    }
    Ok(s)
}

fn resolve_values(args: &SweepArgs) -> Result<Vec<f64>, CliError> {
    let mut values = match (&args.values, args.start, args.stop, args.steps) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(start), Some(stop), Some(steps)) => {
            if steps == 0 {
                return Err(CliError::input("--steps must be at least 1"));
            }
            if steps == 1 {
                vec![start]
            } else {
                (0..steps)
                    .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
                    .collect()
            }
        }
        _ => {
            return Err(CliError::input(
                "give either --values v1,v2,... or all of --start, --stop, --steps",
            ))
        }
    };
    if values.is_empty() {
        return Err(CliError::input("sweep needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::input("sweep values must be finite"));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(args.config.as_deref())?;
    let out_dir = resolve_out_dir(args.out.clone(), &loaded.config.output_dir);
    prepare_out_dir(&out_dir)?;
    write_file(&out_dir.join("config.toml"), &loaded.raw)?;

    let values = resolve_values(&args)?;
    let base = loaded.config.scenario();
    // Surface an unknown parameter before spending time on the runs.
    apply(&base, &args.parameter, values[0])?;

    let rows: Vec<(f64, f64, f64, f64)> = values
        .par_iter()
        .map(|&value| -> Result<_, CliError> {
            let scenario = apply(&base, &args.parameter, value)?;
            let (run, baseline) = run_with_baseline(&scenario)?;
            let stats = RunStats::of(&run);
            let base_peak = RunStats::of(&baseline).peak_lumbar;
            let reduction = reduction_percent(base_peak, stats.peak_lumbar).unwrap_or(0.0);
            Ok((value, stats.peak_hip, stats.peak_lumbar, reduction))
        })
        .collect::<Result<_, _>>()?;

    let csv_path = out_dir.join("sweep.csv");
    write_file(&csv_path, &render_sweep(&rows))?;

    let mut report = Report::new("sweep");
    report.kv("parameter", &args.parameter);
    report.kv("points", rows.len());
    report.num("first_value", rows[0].0);
    report.num("last_value", rows[rows.len() - 1].0);
    report.artifact(&out_dir.join("config.toml"));
    report.artifact(&csv_path);

    if args.plot {
        let torque_path = out_dir.join("sweep_torques.svg");
        line_chart(
            &torque_path,
            &format!("Peak torques vs {}", args.parameter),
            &args.parameter,
            "torque (N m)",
            &[
                Series { label: "hip", points: rows.iter().map(|r| (r.0, r.1)).collect() },
                Series { label: "lumbar", points: rows.iter().map(|r| (r.0, r.2)).collect() },
            ],
        )?;
        report.artifact(&torque_path);
        let reduction_path = out_dir.join("sweep_reduction.svg");
        line_chart(
            &reduction_path,
            &format!("Lumbar peak reduction vs {}", args.parameter),
            &args.parameter,
            "reduction (%)",
            &[Series { label: "reduction", points: rows.iter().map(|r| (r.0, r.3)).collect() }],
        )?;
        report.artifact(&reduction_path);
    }

    report.finish(&out_dir, "report.txt")
}
