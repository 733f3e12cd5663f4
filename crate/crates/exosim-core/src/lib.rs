#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
#![warn(missing_docs)]

//! Core models for a soft, hydraulically assisted back exosuit.
//!
//! Everything in this crate is pure computation over `f64` values, with no
//! IO and no OS dependencies, so it builds without `std` (an allocator is
//! still required for time series). The companion CLI crate layers file
//! formats, plotting, and batch commands on top.
//!
//! - [`dynamics`]: planar two-link stoop-lift dynamics plus a smooth lift
//!   trajectory generator.
//! - [`muscle`]: force and pressure relations of the hydraulic artificial
//!   muscles and their syringe drive, with an elastic-term calibration.
//! - [`sensor`]: loop geometry and pressure response of the knitted strain
//!   sensor, with least-squares geometry fitting.
//! - [`emg`]: zero-phase Butterworth processing, activation metrics, assist
//!   efficiency, and seeded synthetic traces.
//! - [`control`]: the threshold assist controller and the closed-loop lift
//!   simulation that ties the other modules together.
//!
//! All quantities are SI (metres, kilograms, seconds, newtons, pascals,
//! radians) unless a name says otherwise.

extern crate alloc;

pub mod control;
pub mod dynamics;
pub mod emg;
pub mod muscle;
pub mod sensor;

/// A configuration value that violates a documented range or relation.
///
/// Carried by every `validate` method in this crate; `field` names the
/// offending parameter so callers can surface actionable diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("invalid {field}: {reason}")]
pub struct InvalidParam {
    /// Name of the offending field or argument.
    pub field: &'static str,
    /// The range or relation the value must satisfy.
    pub reason: &'static str,
}

impl InvalidParam {
    pub(crate) const fn new(field: &'static str, reason: &'static str) -> Self {
        Self { field, reason }
    }
}

/// Returns `Err` unless `value` is finite and strictly positive.
pub(crate) fn require_positive(value: f64, field: &'static str) -> Result<(), InvalidParam> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(InvalidParam::new(field, "must be finite and > 0"))
    }
}

/// Returns `Err` unless `value` is finite and non-negative.
pub(crate) fn require_non_negative(value: f64, field: &'static str) -> Result<(), InvalidParam> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(InvalidParam::new(field, "must be finite and >= 0"))
    }
}
