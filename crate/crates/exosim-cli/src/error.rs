//! Error channel carrying the exit-code contract: 2 for input and
//! configuration problems, 3 for runtime simulation failures, 4 for
//! calibrations that do not converge.

use std::fmt;
use std::process::ExitCode;

use exosim_core::control::ControlError;
use exosim_core::muscle::MuscleError;
use exosim_core::sensor::SensorError;
use exosim_core::InvalidParam;

#[derive(Debug)]
pub enum CliError {
    /// Bad config file, bad data file, or bad flag value.
    Input(String),
    /// The simulation itself failed after inputs validated.
    Runtime(String),
    /// A calibration ran but did not converge.
    Calibration(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
            CliError::Calibration(_) => ExitCode::from(4),
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
            CliError::Calibration(msg) => write!(f, "calibration error: {msg}"),
        }
    }
}

impl From<InvalidParam> for CliError {
    fn from(e: InvalidParam) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Simulation errors split by phase: validation problems are input
/// errors, anything that surfaces mid-run is a runtime error.
impl From<ControlError> for CliError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::InvalidConfig(inner) => CliError::Input(inner.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Fit errors split by cause: data problems are input errors, a search
/// that ran and failed is a calibration error.
impl From<SensorError> for CliError {
    fn from(e: SensorError) -> Self {
        match e {
            SensorError::FitDiverged => CliError::Calibration(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<MuscleError> for CliError {
    fn from(e: MuscleError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Failure to read an input file.
pub fn read_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Input(format!("cannot read {}: {e}", path.display()))
}

/// Failure to write an output file.
pub fn write_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}
