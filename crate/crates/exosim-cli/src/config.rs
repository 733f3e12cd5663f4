//! Scenario configuration: a sectioned key-value file in TOML syntax.
//!
//! Every physical key carries its SI unit as a suffix (`load_mass_kg`,
//! `threshold_Pa`) so a value can never silently change meaning. Unknown
//! keys are rejected, which turns typos into line-numbered parse errors
//! instead of silently ignored settings. Every section is optional and
//! defaults to the bundled design-point scenario, so a config file only
//! needs the keys it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use exosim_core::control::{ControllerConfig, Scenario};
use exosim_core::dynamics::{AnthropometricModel, SegmentParams};
use exosim_core::muscle::{MuscleParams, SyringeParams};
use exosim_core::sensor::SensorGeometry;

use crate::error::{read_err, CliError};

/// The bundled default configuration, compiled into the binary so
/// `exosim simulate` works with no arguments. The same bytes ship as
/// `configs/default.toml`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub load_mass_kg: f64,
    pub assist_enabled: bool,
    pub anthropometrics: AnthropometricsSection,
    pub muscle: MuscleSection,
    pub syringe: SyringeSection,
    pub sensor: SensorSection,
    pub controller: ControllerSection,
    pub trajectory: TrajectorySection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("runs/default"),
            seed: 42,
            load_mass_kg: 5.0,
            assist_enabled: true,
            anthropometrics: AnthropometricsSection::default(),
            muscle: MuscleSection::default(),
            syringe: SyringeSection::default(),
            sensor: SensorSection::default(),
            controller: ControllerSection::default(),
            trajectory: TrajectorySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnthropometricsSection {
    pub lower_length_m: f64,
    pub lower_mass_kg: f64,
    pub lower_com_offset_m: f64,
    pub lower_inertia_kgm2: f64,
    pub upper_length_m: f64,
    pub upper_mass_kg: f64,
    pub upper_com_offset_m: f64,
    pub upper_inertia_kgm2: f64,
    pub gravity_ms2: f64,
}

impl Default for AnthropometricsSection {
    fn default() -> Self {
        let model = AnthropometricModel::design_point_subject();
        Self {
            lower_length_m: model.lower.length,
            lower_mass_kg: model.lower.mass,
            lower_com_offset_m: model.lower.com_offset,
            lower_inertia_kgm2: model.lower.inertia,
            upper_length_m: model.upper.length,
            upper_mass_kg: model.upper.mass,
            upper_com_offset_m: model.upper.com_offset,
            upper_inertia_kgm2: model.upper.inertia,
            gravity_ms2: model.gravity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MuscleSection {
    pub pre_stretch: f64,
    #[serde(rename = "modulus_Pa")]
    pub modulus_pa: f64,
    pub tube_area_m2: f64,
    #[serde(rename = "coil_stiffness_N_per_m")]
    pub coil_stiffness_n_per_m: f64,
    pub initial_length_m: f64,
    pub outer_diameter_m: f64,
    pub muscle_count: u32,
}

impl Default for MuscleSection {
    fn default() -> Self {
        let p = MuscleParams::default();
        Self {
            pre_stretch: p.alpha,
            modulus_pa: p.e_mod,
            tube_area_m2: p.a_t,
            coil_stiffness_n_per_m: p.k_c,
            initial_length_m: p.l_i,
            outer_diameter_m: p.d_o,
            muscle_count: p.n_muscles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyringeSection {
    pub piston_area_m2: f64,
    pub working_volume_m3: f64,
}

impl Default for SyringeSection {
    fn default() -> Self {
        let s = SyringeParams::default();
        Self { piston_area_m2: s.piston_area, working_volume_m3: s.working_volume }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub d1_m: f64,
    pub d2_m: f64,
    pub g_i_m: f64,
    pub phi_c_rad: f64,
    #[serde(rename = "p_init_Pa")]
    pub p_init_pa: f64,
    pub wall_thickness_m: f64,
    #[serde(rename = "allowable_stress_Pa")]
    pub allowable_stress_pa: f64,
    pub tube_diameter_m: f64,
}

impl Default for SensorSection {
    fn default() -> Self {
        let g = SensorGeometry::default();
        Self {
            d1_m: g.d1,
            d2_m: g.d2,
            g_i_m: g.g_i,
            phi_c_rad: g.phi_c,
            p_init_pa: g.p_init,
            wall_thickness_m: g.t_wall,
            allowable_stress_pa: g.s_allow,
            tube_diameter_m: g.d_tube,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    #[serde(rename = "threshold_Pa")]
    pub threshold_pa: f64,
    #[serde(rename = "f_max_N")]
    pub f_max_n: f64,
    pub strain_max: f64,
    pub moment_arm_m: f64,
    pub lumbar_strain_gain_per_rad: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            threshold_pa: c.threshold,
            f_max_n: c.f_max,
            strain_max: c.strain_max,
            moment_arm_m: c.moment_arm,
            lumbar_strain_gain_per_rad: c.lumbar_strain_gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub peak_hip_rad: f64,
    pub peak_lumbar_rad: f64,
    pub duration_s: f64,
    pub dt_s: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        let s = Scenario::design_point();
        Self {
            peak_hip_rad: s.peak_hip,
            peak_lumbar_rad: s.peak_lumbar,
            duration_s: s.duration,
            dt_s: s.dt,
        }
    }
}

/// A parsed configuration together with the exact bytes it came from,
/// kept for the byte-identical run snapshot.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub raw: String,
}

impl LoadedConfig {
    /// Reads and validates a config file; with no path, uses the bundled
    /// default.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let raw = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| read_err(p, e))?,
            None => DEFAULT_CONFIG_TOML.to_string(),
        };
        let config = parse_config(&raw)?;
        Ok(Self { config, raw })
    }
}

/// Parses config text; TOML syntax and unknown-key errors come back with
/// the offending line and column, validation errors with the field name.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
        // The toml error Display already carries a line/column span.
        CliError::Input(format!("config: {e}"))
    })?;
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    /// Validates by constructing the core scenario, which checks every
    /// range and cross-field relation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.muscle_params().validate().map_err(|e| CliError::input(format!("[muscle] {e}")))?;
        self.scenario().validate()?;
        Ok(())
    }

    pub fn subject(&self) -> AnthropometricModel {
        let a = &self.anthropometrics;
        AnthropometricModel {
            lower: SegmentParams {
                length: a.lower_length_m,
                mass: a.lower_mass_kg,
                com_offset: a.lower_com_offset_m,
                inertia: a.lower_inertia_kgm2,
            },
            upper: SegmentParams {
                length: a.upper_length_m,
                mass: a.upper_mass_kg,
                com_offset: a.upper_com_offset_m,
                inertia: a.upper_inertia_kgm2,
            },
            load_mass: self.load_mass_kg,
            gravity: a.gravity_ms2,
        }
    }

    pub fn muscle_params(&self) -> MuscleParams {
        let m = &self.muscle;
        MuscleParams {
            alpha: m.pre_stretch,
            e_mod: m.modulus_pa,
            a_t: m.tube_area_m2,
            k_c: m.coil_stiffness_n_per_m,
            l_i: m.initial_length_m,
            d_o: m.outer_diameter_m,
            n_muscles: m.muscle_count,
        }
    }

    pub fn syringe_params(&self) -> SyringeParams {
        SyringeParams {
            piston_area: self.syringe.piston_area_m2,
            working_volume: self.syringe.working_volume_m3,
        }
    }

    pub fn sensor_geometry(&self) -> SensorGeometry {
        let s = &self.sensor;
        SensorGeometry {
            d1: s.d1_m,
            d2: s.d2_m,
            g_i: s.g_i_m,
            phi_c: s.phi_c_rad,
            p_init: s.p_init_pa,
            t_wall: s.wall_thickness_m,
            s_allow: s.allowable_stress_pa,
            d_tube: s.tube_diameter_m,
        }
    }

    pub fn controller_config(&self) -> ControllerConfig {
        let c = &self.controller;
        ControllerConfig {
            threshold: c.threshold_pa,
            f_max: c.f_max_n,
            strain_max: c.strain_max,
            moment_arm: c.moment_arm_m,
            lumbar_strain_gain: c.lumbar_strain_gain_per_rad,
        }
    }

    /// The closed-loop scenario this config describes.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            subject: self.subject(),
            sensor: self.sensor_geometry(),
            syringe: self.syringe_params(),
            controller: self.controller_config(),
            peak_hip: self.trajectory.peak_hip_rad,
            peak_lumbar: self.trajectory.peak_lumbar_rad,
            duration: self.trajectory.duration_s,
            dt: self.trajectory.dt_s,
            load_mass: self.load_mass_kg,
            assist_enabled: self.assist_enabled,
        }
    }
}
