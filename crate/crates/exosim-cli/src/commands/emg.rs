//! `exosim emg`: process an assist/no-assist pair of EMG recordings and
//! report activation metrics plus the assist efficiency.

use std::path::PathBuf;

use exosim_core::emg::{efficiency, process, rms_envelope, EmgError, EmgTrace, RMS_WINDOW_S};

use crate::csvio::read_emg;
use crate::error::CliError;
use crate::plot::{line_chart, Series};
use crate::report::{prepare_out_dir, Report};

pub struct EmgArgs {
    pub assist: PathBuf,
    pub no_assist: PathBuf,
    pub sample_rate_hz: Option<f64>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

pub fn run(args: EmgArgs) -> Result<(), CliError> {
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("runs/emg"));
    prepare_out_dir(&out_dir)?;

    let assist = read_emg(&args.assist, args.sample_rate_hz)?;
    let no_assist = read_emg(&args.no_assist, args.sample_rate_hz)?;
    let ratio = assist.sample_rate / no_assist.sample_rate;
    if !(0.999..=1.001).contains(&ratio) {
        return Err(CliError::input(format!(
            "sample rates differ: {} Hz vs {} Hz (use --sample-rate-hz to override both)",
            assist.sample_rate, no_assist.sample_rate
        )));
    }

    let fail = |path: &PathBuf, e: EmgError| CliError::input(format!("{}: {e}", path.display()));
    let (_, m_assist) = process(&assist).map_err(|e| fail(&args.assist, e))?;
    let (_, m_no) = process(&no_assist).map_err(|e| fail(&args.no_assist, e))?;
    let e = efficiency(&m_assist, &m_no).map_err(|e| match e {
        EmgError::DivisionByZero => CliError::input(format!(
            "{}: no-assist iEMG is zero, efficiency undefined (division by zero)",
            args.no_assist.display()
        )),
        other => CliError::input(other.to_string()),
    })?;

    let mut report = Report::new("emg");
    report.num("assist.peak", m_assist.peak);
    report.num("assist.iemg", m_assist.iemg);
    report.num("assist.duration_s", m_assist.duration);
    report.num("no_assist.peak", m_no.peak);
    report.num("no_assist.iemg", m_no.iemg);
    report.num("no_assist.duration_s", m_no.duration);
    report.num("efficiency", e);

    if args.plot {
        let path = out_dir.join("envelope.svg");
        line_chart(
            &path,
            "EMG RMS envelopes",
            "time (s)",
            "envelope",
            &[
                Series { label: "assist", points: envelope_points(&assist)? },
                Series { label: "no assist", points: envelope_points(&no_assist)? },
            ],
        )?;
        report.artifact(&path);
    }

    report.finish(&out_dir, "report.txt")
}

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
