//! `exosim simulate`: run one closed-loop scenario, or the four-scenario
//! protocol (loaded/unloaded crossed with assist on/off), and persist the
//! artifacts.

use std::path::{Path, PathBuf};

use exosim_core::control::{closed_loop_run, reduction_percent, ClosedLoopRun, Scenario};
use exosim_core::emg::{
    rms_envelope, synth_emg, EmgMetrics, EmgTrace, DEFAULT_SAMPLE_RATE, RMS_WINDOW_S,
};

use crate::config::LoadedConfig;
use crate::csvio::{render_emg, render_timeseries, write_file};
use crate::error::CliError;
use crate::plot::{line_chart, Series};
use crate::report::{prepare_out_dir, resolve_out_dir, Report};

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub four_scenario: bool,
    pub plot: bool,
}

/// Per-run summary numbers shared with the sweep command.
pub struct RunStats {
    pub peak_hip: f64,
    pub peak_lumbar: f64,
    pub integrated_hip: f64,
    pub integrated_lumbar: f64,
    pub engaged_steps: usize,
    pub peak_assist: f64,
    pub peak_force: f64,
    pub min_pressure: f64,
}

impl RunStats {
    pub fn of(run: &ClosedLoopRun) -> Self {
        let peaks = run.peak_torques();
        let mut integrated = [0.0f64; 2];
        for pair in run.steps.windows(2) {
            for (acc, j) in integrated.iter_mut().zip(0..) {
                *acc +=
                    0.5 * run.dt * (pair[0].human_torque[j].abs() + pair[1].human_torque[j].abs());
            }
        }
        Self {
            peak_hip: peaks[0],
            peak_lumbar: peaks[1],
            integrated_hip: integrated[0],
            integrated_lumbar: integrated[1],
            engaged_steps: run.steps.iter().filter(|s| s.engaged).count(),
            peak_assist: run.steps.iter().map(|s| s.assist).fold(0.0, f64::max),
            peak_force: run.steps.iter().map(|s| s.muscle_force).fold(0.0, f64::max),
            min_pressure: run.steps.iter().map(|s| s.sensor_pressure).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Runs a scenario plus its assist-disabled twin; the twin prices the
/// assistance. With assist already disabled the twin is the run itself.
pub fn run_with_baseline(scenario: &Scenario) -> Result<(ClosedLoopRun, ClosedLoopRun), CliError> {
    let run = closed_loop_run(scenario)?;
    let baseline = if scenario.assist_enabled {
        closed_loop_run(&Scenario { assist_enabled: false, ..scenario.clone() })?
    } else {
        run.clone()
    };
    Ok((run, baseline))
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(args.config.as_deref())?;
    let mut config = loaded.config.clone();
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = resolve_out_dir(args.out, &config.output_dir);
    prepare_out_dir(&out_dir)?;
    write_file(&out_dir.join("config.toml"), &loaded.raw)?;

    if args.four_scenario {
        four_scenario(&config, &out_dir, args.plot)
    } else {
        single(&config, &out_dir, args.plot)
    }
}

fn single(config: &crate::config::ScenarioConfig, out_dir: &Path, plot: bool) -> Result<(), CliError> {
    let scenario = config.scenario();
    let (run, baseline) = run_with_baseline(&scenario)?;
    let stats = RunStats::of(&run);
    let base_stats = RunStats::of(&baseline);

    let ts_path = out_dir.join("timeseries.csv");
    write_file(&ts_path, &render_timeseries(&run))?;

    let mut report = Report::new("simulate");
    report.kv("seed", config.seed);
    report.num("load_mass_kg", config.load_mass_kg);
    report.kv("assist_enabled", scenario.assist_enabled);
    report.kv("steps", run.steps.len());
    report.kv("engaged_steps", stats.engaged_steps);
    report.num("peak_hip_torque_Nm", stats.peak_hip);
    report.num("peak_lumbar_torque_Nm", stats.peak_lumbar);
    report.num("integrated_hip_torque_Nms", stats.integrated_hip);
    report.num("integrated_lumbar_torque_Nms", stats.integrated_lumbar);
    report.num("baseline_peak_lumbar_torque_Nm", base_stats.peak_lumbar);
    report.num(
        "reduction_percent",
        reduction_percent(base_stats.peak_lumbar, stats.peak_lumbar).unwrap_or(0.0),
    );
    report.num("peak_assist_torque_Nm", stats.peak_assist);
    report.num("peak_muscle_force_N", stats.peak_force);
    report.num("min_sensor_pressure_Pa", stats.min_pressure);
    report.artifact(&out_dir.join("config.toml"));
    report.artifact(&ts_path);

    if plot {
        let t = |r: &ClosedLoopRun, f: fn(&exosim_core::control::ClosedLoopStep) -> f64| {
            r.steps.iter().map(|s| (s.time, f(s))).collect::<Vec<_>>()
        };
        let torques = out_dir.join("torques.svg");
        line_chart(
            &torques,
            "Human joint torques over the lift",
            "time (s)",
            "torque (N m)",
            &[
                Series { label: "hip", points: t(&run, |s| s.human_torque[0]) },
                Series { label: "lumbar", points: t(&run, |s| s.human_torque[1]) },
                Series { label: "lumbar, no assist", points: t(&baseline, |s| s.human_torque[1]) },
            ],
        )?;
        report.artifact(&torques);
        let sensor = out_dir.join("sensor.svg");
        let threshold = scenario.controller.threshold;
        line_chart(
            &sensor,
            "Sensor pressure and engagement threshold",
            "time (s)",
            "pressure (Pa)",
            &[
                Series { label: "sensor", points: t(&run, |s| s.sensor_pressure) },
                Series {
                    label: "threshold",
                    points: vec![
                        (0.0, threshold),
                        (run.steps.last().map_or(0.0, |s| s.time), threshold),
                    ],
                },
            ],
        )?;
        report.artifact(&sensor);
    }

    report.finish(out_dir, "summary.txt")
}

struct Arm {
    name: &'static str,
    load_mass: f64,
    assist: bool,
    seed_offset: u64,
}

fn four_scenario(
    config: &crate::config::ScenarioConfig,
    out_dir: &Path,
    plot: bool,
) -> Result<(), CliError> {
    let base = config.scenario();
    let arms = [
        Arm { name: "loaded_assist", load_mass: config.load_mass_kg, assist: true, seed_offset: 0 },
        Arm {
            name: "loaded_noassist",
            load_mass: config.load_mass_kg,
            assist: false,
            seed_offset: 1,
        },
        Arm { name: "unloaded_assist", load_mass: 0.0, assist: true, seed_offset: 2 },
        Arm { name: "unloaded_noassist", load_mass: 0.0, assist: false, seed_offset: 3 },
    ];

    let mut report = Report::new("simulate --four-scenario");
    report.kv("seed", config.seed);
    report.artifact(&out_dir.join("config.toml"));

    let mut runs = Vec::with_capacity(arms.len());
    for arm in &arms {
        let scenario =
            Scenario { load_mass: arm.load_mass, assist_enabled: arm.assist, ..base.clone() };
        let run = closed_loop_run(&scenario)?;
        let path = out_dir.join(format!("timeseries_{}.csv", arm.name));
        write_file(&path, &render_timeseries(&run))?;
        report.artifact(&path);
        runs.push(run);
    }

    // Synthetic surface EMG per arm: the normalized lumbar torque of the
    // arm plays the activation profile, scaled by the matching no-assist
    // arm so assisted activation sits below one. An analogy for the
    // instrumented protocol, not a reproduction of it.
    let mut emg: Vec<Option<(EmgTrace, EmgMetrics)>> = Vec::with_capacity(arms.len());
    for (arm, run) in arms.iter().zip(&runs) {
        let normalizer_run = if arm.load_mass == 0.0 { &runs[3] } else { &runs[1] };
        let normalizer = normalizer_run.peak_torques()[1];
        if normalizer <= 0.0 {
            emg.push(None);
            continue;
        }
        let activation = activation_profile(run, normalizer, DEFAULT_SAMPLE_RATE);
        let trace = synth_emg(&activation, DEFAULT_SAMPLE_RATE, config.seed + arm.seed_offset)
            .map_err(|e| CliError::runtime(format!("emg synthesis ({}): {e}", arm.name)))?;
        let path = out_dir.join(format!("emg_{}.csv", arm.name));
        write_file(&path, &render_emg(&trace))?;
        report.artifact(&path);
        let (_, m) = exosim_core::emg::process(&trace)
            .map_err(|e| CliError::runtime(format!("emg processing ({}): {e}", arm.name)))?;
        emg.push(Some((trace, m)));
    }

    for (arm, run) in arms.iter().zip(&runs) {
        let stats = RunStats::of(run);
        let k = |suffix: &str| format!("{}.{suffix}", arm.name);
        report.num(&k("peak_hip_torque_Nm"), stats.peak_hip);
        report.num(&k("peak_lumbar_torque_Nm"), stats.peak_lumbar);
        report.num(&k("integrated_hip_torque_Nms"), stats.integrated_hip);
        report.num(&k("integrated_lumbar_torque_Nms"), stats.integrated_lumbar);
        report.kv(&k("engaged_steps"), stats.engaged_steps);
    }
    for (arm, entry) in arms.iter().zip(&emg) {
        if let Some((_, m)) = entry {
            report.num(&format!("{}.emg_peak", arm.name), m.peak);
            report.num(&format!("{}.emg_iemg", arm.name), m.iemg);
        } else {
            report.kv(&format!("{}.emg", arm.name), "skipped (zero baseline torque)");
        }
    }

    for (label, assist_idx, noassist_idx) in [("loaded", 0usize, 1usize), ("unloaded", 2, 3)] {
        let assisted = RunStats::of(&runs[assist_idx]).peak_lumbar;
        let baseline = RunStats::of(&runs[noassist_idx]).peak_lumbar;
        report.num(
            &format!("{label}.reduction_percent"),
            reduction_percent(baseline, assisted).unwrap_or(0.0),
        );
        if let (Some((_, ma)), Some((_, mn))) = (&emg[assist_idx], &emg[noassist_idx]) {
            let e = exosim_core::emg::efficiency(ma, mn)
                .map_err(|e| CliError::runtime(format!("efficiency ({label}): {e}")))?;
            report.num(&format!("{label}.emg_efficiency"), e);
        }
    }

    if plot {
        for (label, assist_idx, noassist_idx) in [("loaded", 0usize, 1usize), ("unloaded", 2, 3)] {
            let torque_path = out_dir.join(format!("torques_{label}.svg"));
            let series = |run: &ClosedLoopRun| {
                run.steps.iter().map(|s| (s.time, s.human_torque[1])).collect::<Vec<_>>()
            };
            line_chart(
                &torque_path,
                &format!("Lumbar torque, {label}"),
                "time (s)",
                "torque (N m)",
                &[
                    Series { label: "assist", points: series(&runs[assist_idx]) },
                    Series { label: "no assist", points: series(&runs[noassist_idx]) },
                ],
            )?;
            report.artifact(&torque_path);

            if let (Some((ta, _)), Some((tn, _))) = (&emg[assist_idx], &emg[noassist_idx]) {
                let env_path = out_dir.join(format!("emg_envelope_{label}.svg"));
                line_chart(
                    &env_path,
                    &format!("EMG RMS envelopes, {label}"),
                    "time (s)",
                    "envelope",
                    &[
                        Series { label: "assist", points: envelope_points(ta)? },
                        Series { label: "no assist", points: envelope_points(tn)? },
                    ],
                )?;
                report.artifact(&env_path);
            }
        }
    }

    report.finish(out_dir, "summary.txt")
}

/// Resamples the run's normalized lumbar torque magnitude onto the EMG
/// sample grid by linear interpolation; values clamp to [0, 1].
fn activation_profile(run: &ClosedLoopRun, normalizer: f64, sample_rate: f64) -> Vec<f64> {
    let duration = (run.steps.len() - 1) as f64 * run.dt;
    let n = (duration * sample_rate).round() as usize + 1;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let t = j as f64 / sample_rate;
        let pos = (t / run.dt).min((run.steps.len() - 1) as f64);
        let i = (pos.floor() as usize).min(run.steps.len() - 2);
        let frac = pos - i as f64;
        let a = run.steps[i].human_torque[1].abs();
        let b = run.steps[i + 1].human_torque[1].abs();
        out.push(((a + (b - a) * frac) / normalizer).clamp(0.0, 1.0));
    }
    out
}

/// RMS envelope decimated to a plottable point count.
fn envelope_points(trace: &EmgTrace) -> Result<Vec<(f64, f64)>, CliError> {
    let env = rms_envelope(trace, RMS_WINDOW_S)
        .map_err(|e| CliError::runtime(format!("envelope: {e}")))?;
    let stride = (env.samples.len() / 2000).max(1);
    let dt = 1.0 / env.sample_rate;
    Ok(env
        .samples
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, &v)| (i as f64 * dt, v))
        .collect())
}
