//! `exosim calibrate-sensor`: fit the loop geometry to measured
//! strain/pressure samples and report the fit quality.

use std::path::PathBuf;

use exosim_core::sensor::{fit_geometry, FitOptions};
use serde::Serialize;

use crate::config::{LoadedConfig, SensorSection};
use crate::csvio::{read_pairs, write_file, SENSOR_DATA_HEADER};
use crate::error::CliError;
use crate::plot::fit_chart;
use crate::report::{prepare_out_dir, resolve_out_dir, Report};

pub struct CalibrateSensorArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub max_iterations: Option<usize>,
    pub fit_strain_offset: bool,
    pub plot: bool,
}

/// Fitted geometry rendered as a `[sensor]` table so the report file can
/// be dropped straight into a scenario config.
#[derive(Serialize)]
struct FittedConfig {
    sensor: SensorSection,
}

pub fn run(args: CalibrateSensorArgs) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(args.config.as_deref())?;
    let out_dir = resolve_out_dir(args.out, &loaded.config.output_dir);
    prepare_out_dir(&out_dir)?;

    let samples = read_pairs(&args.data, SENSOR_DATA_HEADER)?;
    let seed = loaded.config.sensor_geometry();
    let mut options = FitOptions::default();
    if let Some(cap) = args.max_iterations {
        options.max_iterations = cap;
    }
    options.fit_strain_offset = args.fit_strain_offset;

    let fit = fit_geometry(&samples, &seed, &options)?;
    let geom = fit.geometry;

    let fitted_path = out_dir.join("fitted_geometry.toml");
    let section = SensorSection {
        d1_m: geom.d1,
        d2_m: geom.d2,
        g_i_m: geom.g_i,
        phi_c_rad: geom.phi_c,
        p_init_pa: geom.p_init,
        wall_thickness_m: geom.t_wall,
        allowable_stress_pa: geom.s_allow,
        tube_diameter_m: geom.d_tube,
    };
    let rendered = toml::to_string(&FittedConfig { sensor: section })
        .map_err(|e| CliError::runtime(format!("render fitted geometry: {e}")))?;
    write_file(&fitted_path, &rendered)?;

    let mut report = Report::new("calibrate-sensor");
    report.kv("samples", samples.len());
    report.num("fitted_d2_m", geom.d2);
    report.num("fitted_g_i_m", geom.g_i);
    report.num("fitted_phi_c_rad", geom.phi_c);
    report.num("strain_offset", fit.strain_offset);
    report.num("r_squared", fit.r_squared);
    report.num("rms_residual_Pa", fit.rms_residual);
    report.kv("iterations", fit.iterations);
    report.num("sensitivity_kPa_per_percent", geom.sensitivity()?);
    report.num("max_strain", geom.max_strain());
    report.artifact(&fitted_path);

    if args.plot {
        let cap = geom.max_strain();
        let top = samples.iter().map(|&(s, _)| s).fold(0.0f64, f64::max).min(cap);
        let curve: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let s = top * i as f64 / 400.0;
                let eff = (s - fit.strain_offset).max(0.0);
                (s, geom.pressure_at_strain(eff).unwrap_or(f64::NAN))
            })
            .collect();
        let fit_path = out_dir.join("fit.svg");
        fit_chart(
            &fit_path,
            "Sensor pressure vs strain",
            "strain",
            "pressure (Pa)",
            &samples,
            &curve,
        )?;
        report.artifact(&fit_path);

        let residuals: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(s, p)| {
                let eff = (s - fit.strain_offset).max(0.0);
                (s, geom.pressure_at_strain(eff).map_or(f64::NAN, |m| m - p))
            })
            .collect();
        let zero = [(0.0, 0.0), (top, 0.0)];
        let residual_path = out_dir.join("residuals.svg");
        fit_chart(
            &residual_path,
            "Fit residuals (model minus data)",
            "strain",
            "residual (Pa)",
            &residuals,
            &zero,
        )?;
        report.artifact(&residual_path);
    }

    report.finish(&out_dir, "report.txt")
}
