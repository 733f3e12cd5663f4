//! CSV schemas of the toolkit.
//!
//! Writers go through [`fmt_sig`](crate::fmt::fmt_sig) for byte-stable
//! output; readers insist on exact headers so a mislabelled file fails
//! loudly with the line number instead of being misread.

use std::path::Path;

use exosim_core::control::ClosedLoopRun;
use exosim_core::emg::EmgTrace;

use crate::error::{read_err, write_err, CliError};
use crate::fmt::fmt_sig;

pub const TIMESERIES_HEADER: &str = "t,theta_hip,theta_lumbar,tau_hip_human,tau_lumbar_human,tau_ext,sensor_pressure_Pa,muscle_force_N,engaged";
pub const SWEEP_HEADER: &str = "value,peak_hip_torque_Nm,peak_lumbar_torque_Nm,reduction_percent";
pub const SENSOR_DATA_HEADER: &str = "strain,pressure_Pa";
pub const MUSCLE_DATA_HEADER: &str = "elongation_m,force_N";
pub const EMG_HEADER: &str = "t,emg";

/// Renders a closed-loop run in the fixed nine-column layout.
pub fn render_timeseries(run: &ClosedLoopRun) -> String {
    let mut out = String::with_capacity(run.steps.len() * 96 + 128);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for step in &run.steps {
        let row = [
            fmt_sig(step.time),
            fmt_sig(step.state.angles[0]),
            fmt_sig(step.state.angles[1]),
            fmt_sig(step.human_torque[0]),
            fmt_sig(step.human_torque[1]),
            fmt_sig(step.assist),
            fmt_sig(step.sensor_pressure),
            fmt_sig(step.muscle_force),
        ];
        out.push_str(&row.join(","));
        out.push(',');
        out.push_str(if step.engaged { "true" } else { "false" });
        out.push('\n');
    }
    out
}

/// Renders an EMG trace as `t,emg` rows.
pub fn render_emg(trace: &EmgTrace) -> String {
    let mut out = String::with_capacity(trace.samples.len() * 28 + 16);
    out.push_str(EMG_HEADER);
    out.push('\n');
    let dt = 1.0 / trace.sample_rate;
    for (i, &v) in trace.samples.iter().enumerate() {
        out.push_str(&fmt_sig(i as f64 * dt));
        out.push(',');
        out.push_str(&fmt_sig(v));
        out.push('\n');
    }
    out
}

/// Renders sweep results, one row per parameter value.
pub fn render_sweep(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for &(value, hip, lumbar, reduction) in rows {
        out.push_str(
            &[fmt_sig(value), fmt_sig(hip), fmt_sig(lumbar), fmt_sig(reduction)].join(","),
        );
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| write_err(path, e))
}

/// Reads a two-column numeric CSV with the exact `expected_header`.
/// Returns `(first, second)` pairs in file order.
pub fn read_pairs(path: &Path, expected_header: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| read_err(path, e))?;
    let headers = reader.headers().map_err(|e| read_err(path, e))?;
    let got = headers.iter().collect::<Vec<_>>().join(",");
    if got != expected_header {
        return Err(CliError::input(format!(
            "{}: expected header `{expected_header}`, found `{got}`",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| read_err(path, e))?;
        if record.len() != 2 {
            return Err(CliError::input(format!(
                "{} line {line}: expected 2 columns, found {}",
                path.display(),
                record.len()
            )));
        }
        let mut pair = [0.0f64; 2];
        for (slot, field) in pair.iter_mut().zip(record.iter()) {
            *slot = field.parse().map_err(|_| {
                CliError::input(format!(
                    "{} line {line}: `{field}` is not a number",
                    path.display()
                ))
            })?;
        }
        out.push((pair[0], pair[1]));
    }
    Ok(out)
}

/// Reads a `t,emg` file into a trace. The sample rate comes from the
/// time column unless `rate_override` is given; the time grid must be
/// uniform either way.
pub fn read_emg(path: &Path, rate_override: Option<f64>) -> Result<EmgTrace, CliError> {
    let rows = read_pairs(path, EMG_HEADER)?;
    if rows.len() < 2 {
        return Err(CliError::input(format!(
            "{}: need at least 2 samples to establish a sample rate",
            path.display()
        )));
    }
    let dt = rows[1].0 - rows[0].0;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::input(format!(
            "{}: time column must be strictly increasing",
            path.display()
        )));
    }
    for window in rows.windows(2) {
        let step = window[1].0 - window[0].0;
        if (step - dt).abs() > 1e-6 * dt {
            return Err(CliError::input(format!(
                "{}: time grid is not uniform (step {step} vs {dt})",
                path.display()
            )));
        }
    }
    let rate = rate_override.unwrap_or(1.0 / dt);
    let samples = rows.into_iter().map(|(_, v)| v).collect();
    EmgTrace::new(rate, samples).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
