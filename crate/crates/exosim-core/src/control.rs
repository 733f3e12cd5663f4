//! Threshold assist controller and the closed-loop lift simulation.
//!
//! The working principle: the knitted sensor runs along the spine, so its
//! inner pressure falls as the wearer flexes. Once the pressure drops
//! below a threshold the controller engages and commands a muscle force
//! proportional to the sensed spinal strain, saturating at the design
//! force. The force acts about the lumbosacral joint through a fixed
//! moment arm, shrinking the extensor torque the wearer must produce.
//!
//! [`closed_loop_run`] ties the modules together along a prescribed lift:
//! at each sample the lumbar angle maps linearly to spinal strain, the
//! strain drives the forward sensor model, the sensed pressure drives the
//! controller, and the resulting assist torque enters the inverse
//! dynamics to give the human share of the joint torques. The motion
//! itself is prescribed, assistance changes who supplies the torque, not
//! the kinematics.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::dynamics::{lift_trajectory, AnthropometricModel, JointState, MAX_STEP_DT};
use crate::muscle::{MuscleError, SyringeParams, FULL_STROKE_STRAIN};
use crate::sensor::{SensorError, SensorGeometry};
use crate::{require_positive, InvalidParam};

/// Linear actuator slew bound (m/s). Strokes commanded faster than this
/// are tracked at the limit; the reference hardware moves 50 mm/s.
pub const STROKE_RATE_LIMIT: f64 = 0.05;

/// Default lumbar-angle-to-spinal-strain gain (strain per rad), chosen so
/// the default lift's 15 degree lumbar peak produces the 20% design
/// strain.
pub const DEFAULT_LUMBAR_STRAIN_GAIN: f64 = 0.2 / (core::f64::consts::PI / 12.0);

/// Tunable constants of the assist controller.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerConfig {
    /// Engagement threshold (Pa). The controller acts only while the
    /// sensed pressure sits strictly below this, which keeps incidental
    /// sway from triggering assistance.
    pub threshold: f64,
    /// Force command at full spinal strain (N, total across muscles).
    pub f_max: f64,
    /// Spinal strain treated as full flexion; the force law saturates
    /// here.
    pub strain_max: f64,
    /// Effective moment arm of the muscle line of action about the
    /// lumbosacral joint (m).
    pub moment_arm: f64,
    /// Linear map from lumbar angle to spinal strain (strain per rad).
    pub lumbar_strain_gain: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            threshold: 280e3,
            f_max: 50.0,
            strain_max: 0.20,
            moment_arm: 0.05,
            lumbar_strain_gain: DEFAULT_LUMBAR_STRAIN_GAIN,
        }
    }
}

impl ControllerConfig {
    /// Checks every parameter range. The threshold-versus-sensor relation
    /// is checked at use, where the paired geometry is known.
    ///
    /// # Errors
    ///
    /// [`InvalidParam`] naming the offending field.
    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_positive(self.threshold, "threshold")?;
        require_positive(self.f_max, "f_max")?;
        require_positive(self.moment_arm, "moment_arm")?;
        require_positive(self.lumbar_strain_gain, "lumbar_strain_gain")?;
        if !(self.strain_max.is_finite() && self.strain_max > 0.0 && self.strain_max <= 0.5) {
            return Err(InvalidParam::new("strain_max", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// One controller decision.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlCommand {
    /// Whether the sensed pressure crossed below the threshold.
    pub engaged: bool,
    /// Commanded total muscle force (N); zero when disengaged.
    pub target_force: f64,
    /// Commanded syringe stroke (m); zero when disengaged.
    pub actuator_stroke: f64,
}

impl ControlCommand {
    /// The resting command: no engagement, no force, no stroke.
    pub const DISENGAGED: Self =
        Self { engaged: false, target_force: 0.0, actuator_stroke: 0.0 };
}

/// Failure modes of the controller and the closed-loop simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    /// Sensed pressure above the sensor's rest pressure; a sealed sensor
    /// cannot read higher, so the line is disconnected or damaged.
    #[error("sensed pressure above rest pressure, sensor fault")]
    SensorFault,
    /// A configuration value is out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(#[from] InvalidParam),
    /// The sensor model could not be evaluated.
    #[error("sensor model: {0}")]
    Sensor(#[from] SensorError),
    /// The syringe mapping could not be evaluated.
    #[error("actuator mapping: {0}")]
    Muscle(#[from] MuscleError),
    /// A module failure at one simulation step.
    #[error("step {index}: {source}")]
    AtStep {
        /// Index of the failing sample.
        index: usize,
        /// The underlying failure.
        source: Box<ControlError>,
    },
}

/// One controller update from a sensed pressure.
///
/// Below the threshold, the sensed strain (by inverting the sensor
/// model) sets the force, `f_max * min(strain / strain_max, 1)`, and the
/// stroke that the syringe needs to track that strain. Pressures beneath
/// the calibrated floor read as the validity-limit strain, so deep
/// flexion saturates the command instead of failing.
///
/// # Errors
///
/// [`ControlError::SensorFault`] when `sensed_pressure` exceeds the rest
/// pressure or is not finite; [`ControlError::InvalidConfig`] for bad
/// parameters or a threshold at or above the rest pressure; sensor and
/// syringe failures pass through.
pub fn update(
    cfg: &ControllerConfig,
    geom: &SensorGeometry,
    syringe: &SyringeParams,
    sensed_pressure: f64,
) -> Result<ControlCommand, ControlError> {
    cfg.validate()?;
    geom.validate()?;
    syringe.validate()?;
    if cfg.threshold >= geom.p_init {
        return Err(InvalidParam::new("threshold", "must stay below the sensor rest pressure").into());
    }
    if !sensed_pressure.is_finite() || sensed_pressure > geom.p_init {
        return Err(ControlError::SensorFault);
    }
    if sensed_pressure >= cfg.threshold {
        return Ok(ControlCommand::DISENGAGED);
    }
    let floor = geom.pressure_at_strain(geom.max_strain())?;
    let strain = geom.strain_from_pressure(sensed_pressure.max(floor))?;
    let target_force = cfg.f_max * (strain / cfg.strain_max).min(1.0);
    let actuator_stroke = syringe.stroke_for_strain(strain.min(FULL_STROKE_STRAIN))?;
    Ok(ControlCommand { engaged: true, target_force, actuator_stroke })
}

/// Torque the muscle force produces about the lumbosacral joint,
/// `force * moment_arm` (N m). Both arguments are expected non-negative.
#[must_use]
pub fn assist_torque(target_force: f64, moment_arm: f64) -> f64 {
    target_force * moment_arm
}

/// Percentage by which `assisted` undercuts `baseline`; `None` when the
/// baseline is zero and the ratio is undefined.
#[must_use]
pub fn reduction_percent(baseline: f64, assisted: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (1.0 - assisted / baseline))
}

/// A complete closed-loop experiment: subject, hardware, controller, and
/// the lift to perform.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    /// Segment parameters of the wearer.
    pub subject: AnthropometricModel,
    /// Paired sensor geometry.
    pub sensor: SensorGeometry,
    /// Drive syringe.
    pub syringe: SyringeParams,
    /// Assist controller settings.
    pub controller: ControllerConfig,
    /// Peak hip flexion of the lift (rad).
    pub peak_hip: f64,
    /// Peak lumbar flexion of the lift (rad).
    pub peak_lumbar: f64,
    /// Total lift duration (s).
    pub duration: f64,
    /// Sample interval (s).
    pub dt: f64,
    /// Carried load (kg), overriding the subject's `load_mass`.
    pub load_mass: f64,
    /// Whether the controller may engage at all.
    pub assist_enabled: bool,
}

impl Scenario {
    /// The shipped demonstration: the design-point subject stooping to 45
    /// degrees of hip and 15 degrees of lumbar flexion over 4 s with a
    /// 5 kg load, sized so the 50 N assist relieves roughly a fifth of
    /// the peak lumbar demand.
    #[must_use]
    pub fn design_point() -> Self {
        Self {
            subject: AnthropometricModel::design_point_subject(),
            sensor: SensorGeometry::default(),
            syringe: SyringeParams::default(),
            controller: ControllerConfig::default(),
            peak_hip: core::f64::consts::FRAC_PI_4,
            peak_lumbar: core::f64::consts::PI / 12.0,
            duration: 4.0,
            dt: 0.005,
            load_mass: 5.0,
            assist_enabled: true,
        }
    }

    /// Checks all nested parameters plus the cross-cutting relations:
    /// threshold below rest pressure, `dt` within the integrator bound,
    /// at least two samples.
    ///
    /// # Errors
    ///
    /// [`InvalidParam`] naming the offending field.
    pub fn validate(&self) -> Result<(), InvalidParam> {
        self.subject.validate()?;
        self.sensor.validate()?;
        self.syringe.validate()?;
        self.controller.validate()?;
        if self.controller.threshold >= self.sensor.p_init {
            return Err(InvalidParam::new("threshold", "must stay below the sensor rest pressure"));
        }
        if !(self.peak_hip.is_finite() && self.peak_lumbar.is_finite()) {
            return Err(InvalidParam::new("peaks", "must be finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= MAX_STEP_DT) {
            return Err(InvalidParam::new("dt", "must lie in (0, 0.01] s"));
        }
        if !(self.duration.is_finite() && self.duration >= 2.0 * self.dt) {
            return Err(InvalidParam::new("duration", "must cover at least two steps of dt"));
        }
        crate::require_non_negative(self.load_mass, "load_mass")?;
        Ok(())
    }

    fn loaded_subject(&self) -> AnthropometricModel {
        AnthropometricModel { load_mass: self.load_mass, ..self.subject }
    }
}

/// One synchronized sample of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosedLoopStep {
    /// Sample time (s).
    pub time: f64,
    /// Prescribed joint state.
    pub state: JointState,
    /// Torque the wearer supplies at [hip, lumbosacral] (N m); extensor
    /// effort during a stoop is negative.
    pub human_torque: [f64; 2],
    /// Assist torque applied at the lumbosacral joint (N m).
    pub assist: f64,
    /// Sensor pressure fed to the controller (Pa).
    pub sensor_pressure: f64,
    /// Muscle force the assist delivers (N).
    pub muscle_force: f64,
    /// Actuator stroke after slew limiting (m).
    pub actuator_stroke: f64,
    /// Controller engagement flag.
    pub engaged: bool,
}

/// Time series produced by [`closed_loop_run`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosedLoopRun {
    /// Sample interval (s).
    pub dt: f64,
    /// Samples from 0 to the rounded duration inclusive.
    pub steps: Vec<ClosedLoopStep>,
}

impl ClosedLoopRun {
    /// Largest torque magnitude per joint over the run (N m).
    #[must_use]
    pub fn peak_torques(&self) -> [f64; 2] {
        let mut peaks = [0.0f64; 2];
        for step in &self.steps {
            for (peak, tau) in peaks.iter_mut().zip(step.human_torque) {
                *peak = peak.max(tau.abs());
            }
        }
        peaks
    }
}

/// Runs one scenario to completion.
///
/// Deterministic: the pipeline is pure arithmetic, so identical scenarios
/// produce identical output bit for bit. The commanded stroke is slew
/// limited at [`STROKE_RATE_LIMIT`] from one sample to the next;
/// everything else responds instantaneously.
///
/// # Errors
///
/// [`ControlError::InvalidConfig`] for a scenario that fails validation;
/// any module failure inside the loop comes back as
/// [`ControlError::AtStep`] with the sample index.
pub fn closed_loop_run(scenario: &Scenario) -> Result<ClosedLoopRun, ControlError> {
    scenario.validate()?;
    let subject = scenario.loaded_subject();
    let trajectory =
        lift_trajectory([scenario.peak_hip, scenario.peak_lumbar], scenario.duration, scenario.dt)?;
    let geom = &scenario.sensor;
    let strain_cap = geom.max_strain();
    let mut steps = Vec::with_capacity(trajectory.samples.len());
    let mut stroke = 0.0;
    for (index, sample) in trajectory.samples.iter().enumerate() {
        let wrap = |source| ControlError::AtStep { index, source: Box::new(source) };
        // Lumbar flexion stretches the sensor; extension leaves it slack.
        // Strain saturates at the geometry's validity limit.
        let strain =
            (scenario.controller.lumbar_strain_gain * sample.angles[1]).clamp(0.0, strain_cap);
        let pressure = geom.pressure_at_strain(strain).map_err(|e| wrap(e.into()))?;
        let command = if scenario.assist_enabled {
            update(&scenario.controller, geom, &scenario.syringe, pressure).map_err(wrap)?
        } else {
            ControlCommand::DISENGAGED
        };
        let slew = STROKE_RATE_LIMIT * scenario.dt;
        stroke += (command.actuator_stroke - stroke).clamp(-slew, slew);
        let assist = assist_torque(command.target_force, scenario.controller.moment_arm);
        let state = sample.state();
        let human_torque =
            subject.inverse_dynamics(&state, sample.accelerations, [0.0; 2], assist);
        steps.push(ClosedLoopStep {
            time: sample.time,
            state,
            human_torque,
            assist,
            sensor_pressure: pressure,
            muscle_force: command.target_force,
            actuator_stroke: stroke,
            engaged: command.engaged,
        });
    }
    Ok(ClosedLoopRun { dt: trajectory.dt, steps })
}
