//! `exosim calibrate-muscle`: fit the elastic term of the muscle force
//! law to measured elongation/force samples.

use std::path::PathBuf;

use exosim_core::muscle::calibrate_elastic_term;

use crate::config::LoadedConfig;
use crate::csvio::{read_pairs, MUSCLE_DATA_HEADER};
use crate::error::CliError;
use crate::plot::fit_chart;
use crate::report::{prepare_out_dir, resolve_out_dir, Report};

pub struct CalibrateMuscleArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

pub fn run(args: CalibrateMuscleArgs) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(args.config.as_deref())?;
    let out_dir = resolve_out_dir(args.out, &loaded.config.output_dir);
    prepare_out_dir(&out_dir)?;

    let samples = read_pairs(&args.data, MUSCLE_DATA_HEADER)?;
    let params = loaded.config.muscle_params();
    params.validate().map_err(|e| CliError::input(format!("[muscle] {e}")))?;
    let fit = calibrate_elastic_term(&samples, &params)?;

    let mut report = Report::new("calibrate-muscle");
    report.kv("samples", samples.len());
    report.num("fitted_pre_stretch_area_product_m2", fit.product);
    report.num("rms_residual_N", fit.rms_residual);
    report.kv("clamped_to_zero", fit.clamped);
    report.num("reference_pre_stretch_area_product_m2", params.alpha * params.a_t);

    if args.plot {
        let top = samples.iter().map(|&(x, _)| x).fold(0.0f64, f64::max);
        let model = |x: f64| {
            fit.product * params.e_mod * (1.0 - 1.0 / (1.0 + x / params.l_i)) + params.k_c * x
        };
        let curve: Vec<(f64, f64)> =
            (0..=400).map(|i| top * i as f64 / 400.0).map(|x| (x, model(x))).collect();
        let path = out_dir.join("fit.svg");
        fit_chart(&path, "Muscle force vs elongation", "elongation (m)", "force (N)", &samples, &curve)?;
        report.artifact(&path);
    }

    report.finish(&out_dir, "report.txt")
}
