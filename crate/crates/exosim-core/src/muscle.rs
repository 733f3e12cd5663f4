//! Hydraulic artificial-muscle mechanics and the syringe transmission.
//!
//! Each muscle is a pre-stretched silicone microtubule threaded through a
//! helical coil. Pressurising the tubule makes it try to fatten; the coil
//! blocks radial expansion, so the stored elastic energy converts to axial
//! contraction force. Several muscles run in parallel off one hydraulic
//! circuit fed by a syringe that a linear actuator drives.
//!
//! The force law per muscle is
//!
//! ```text
//! F(x) = alpha * E * A_t * (1 - 1 / (1 + x / l_i)) + k_c * x
//! ```
//!
//! with `x` the elongation from rest. The matching internal pressure is
//! `P = F / (pi/4 * d_o^2 - alpha * A_t / (1 + x / l_i))`; the validated
//! parameter ranges keep that denominator positive everywhere. The
//! syringe maps actuator stroke to muscle strain volumetrically
//! (incompressible fluid): pushing the full working volume through the
//! piston produces 20% muscle strain, linearly in between.

#[allow(unused_imports)]
use num_traits::Float;

use crate::{require_positive, InvalidParam};

/// Muscle strain reached when the syringe's whole working volume has been
/// displaced. Anchors the linear stroke-to-strain map.
pub const FULL_STROKE_STRAIN: f64 = 0.2;

/// Parameters of one artificial muscle and its parallel count.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MuscleParams {
    /// Pre-stretch strain of the microtubule (dimensionless).
    pub alpha: f64,
    /// Young's modulus of the microtubule (Pa).
    pub e_mod: f64,
    /// Microtubule cross-sectional area (m^2).
    pub a_t: f64,
    /// Spring constant of the helical coil (N/m).
    pub k_c: f64,
    /// Initial muscle length (m).
    pub l_i: f64,
    /// Microtubule outer diameter (m).
    pub d_o: f64,
    /// Number of muscles plumbed in parallel.
    pub n_muscles: u32,
}

impl Default for MuscleParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            e_mod: 1.2556e6,
            a_t: 3e-6,
            k_c: 126.0,
            l_i: 0.3,
            d_o: 2e-3,
            n_muscles: 5,
        }
    }
}

impl MuscleParams {
    /// Largest elongation the model is trusted for (m).
    ///
    /// Half the rest length; beyond that the linear-elastic reading of the
    /// force law stops being credible.
    #[must_use]
    pub fn max_elongation(&self) -> f64 {
        0.5 * self.l_i
    }

    /// Checks parameter ranges, including positivity of the pressure
    /// denominator at zero elongation (its minimum over the domain).
    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_positive(self.alpha, "alpha")?;
        require_positive(self.e_mod, "e_mod")?;
        require_positive(self.a_t, "a_t")?;
        require_positive(self.k_c, "k_c")?;
        require_positive(self.l_i, "l_i")?;
        require_positive(self.d_o, "d_o")?;
        if self.n_muscles < 1 {
            return Err(InvalidParam::new("n_muscles", "must be at least 1"));
        }
        if core::f64::consts::FRAC_PI_4 * self.d_o * self.d_o <= self.alpha * self.a_t {
            return Err(InvalidParam::new(
                "a_t",
                "tube cross-section pi/4 d_o^2 must exceed alpha * a_t",
            ));
        }
        Ok(())
    }

    /// Output force of a single muscle at elongation `x` (N).
    ///
    /// Zero at rest, strictly increasing. The elastic term saturates as
    /// the tubule approaches its pre-stretch limit; the coil spring term
    /// grows linearly.
    ///
    /// # Errors
    ///
    /// [`MuscleError::ElongationOutOfRange`] unless
    /// `0 <= x <= max_elongation()`.
    pub fn force(&self, x: f64) -> Result<f64, MuscleError> {
        self.check_elongation(x)?;
        Ok(self.alpha * self.e_mod * self.a_t * (1.0 - 1.0 / (1.0 + x / self.l_i)) + self.k_c * x)
    }

    /// Combined force of all `n_muscles` parallel muscles (N).
    ///
    /// # Errors
    ///
    /// Same domain as [`MuscleParams::force`].
    pub fn total_force(&self, x: f64) -> Result<f64, MuscleError> {
        Ok(f64::from(self.n_muscles) * self.force(x)?)
    }

    /// Internal pressure needed for a single muscle to output `f_out` at
    /// elongation `x` (Pa).
    ///
    /// # Errors
    ///
    /// [`MuscleError::ElongationOutOfRange`] outside the force-law domain;
    /// [`MuscleError::DegenerateGeometry`] when the pre-stretched tubule
    /// area swallows the whole tube cross-section, which validated
    /// parameters cannot reach.
    pub fn required_pressure(&self, f_out: f64, x: f64) -> Result<f64, MuscleError> {
        self.check_elongation(x)?;
        let denom = core::f64::consts::FRAC_PI_4 * self.d_o * self.d_o
            - self.alpha * self.a_t / (1.0 + x / self.l_i);
        if denom <= 0.0 {
            return Err(MuscleError::DegenerateGeometry);
        }
        Ok(f_out / denom)
    }

    fn check_elongation(&self, x: f64) -> Result<(), MuscleError> {
        if x.is_finite() && (0.0..=self.max_elongation()).contains(&x) {
            Ok(())
        } else {
            Err(MuscleError::ElongationOutOfRange)
        }
    }
}

/// Hydraulic syringe driven by the linear actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyringeParams {
    /// Piston area (m^2).
    pub piston_area: f64,
    /// Working fluid volume displaced over the full stroke (m^3).
    pub working_volume: f64,
}

impl Default for SyringeParams {
    fn default() -> Self {
        Self { piston_area: 55.4e-6, working_volume: 2e-6 }
    }
}

impl SyringeParams {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_positive(self.piston_area, "piston_area")?;
        require_positive(self.working_volume, "working_volume")?;
        Ok(())
    }

    /// Stroke that displaces the whole working volume (m).
    #[must_use]
    pub fn full_stroke(&self) -> f64 {
        self.working_volume / self.piston_area
    }

    /// Muscle strain produced by an actuator `stroke` (dimensionless).
    ///
    /// Linear, hitting [`FULL_STROKE_STRAIN`] at the full stroke.
    ///
    /// # Errors
    ///
    /// [`MuscleError::StrokeOutOfRange`] unless `0 <= stroke <=
    /// full_stroke()`.
    pub fn strain_for_stroke(&self, stroke: f64) -> Result<f64, MuscleError> {
        if !(stroke.is_finite() && (0.0..=self.full_stroke()).contains(&stroke)) {
            return Err(MuscleError::StrokeOutOfRange);
        }
        Ok(FULL_STROKE_STRAIN * stroke * self.piston_area / self.working_volume)
    }

    /// Actuator stroke that produces a muscle `strain` (m). Inverse of
    /// [`SyringeParams::strain_for_stroke`].
    ///
    /// # Errors
    ///
    /// [`MuscleError::StrainOutOfRange`] unless `0 <= strain <=`
    /// [`FULL_STROKE_STRAIN`].
    pub fn stroke_for_strain(&self, strain: f64) -> Result<f64, MuscleError> {
        if !(strain.is_finite() && (0.0..=FULL_STROKE_STRAIN).contains(&strain)) {
            return Err(MuscleError::StrainOutOfRange);
        }
        Ok(strain / FULL_STROKE_STRAIN * self.working_volume / self.piston_area)
    }
}

/// Total thrust the actuator must overcome to hold `pressure` in
/// `n_muscles` parallel circuits (N); bilinear in pressure and piston
/// area.
#[must_use]
pub fn actuator_thrust(pressure: f64, syringe: &SyringeParams, n_muscles: u32) -> f64 {
    f64::from(n_muscles) * pressure * syringe.piston_area
}

/// Muscle-model failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MuscleError {
    /// Elongation fell outside `[0, max_elongation]`.
    #[error("elongation outside the model's validity range [0, 0.5 l_i]")]
    ElongationOutOfRange,
    /// The pressure denominator was not positive.
    #[error("tubule area exceeds the tube cross-section; pressure undefined")]
    DegenerateGeometry,
    /// Stroke fell outside `[0, full_stroke]`.
    #[error("stroke outside [0, working_volume / piston_area]")]
    StrokeOutOfRange,
    /// Strain fell outside the mapped `[0, 0.2]` band.
    #[error("strain outside the mapped range [0, 0.2]")]
    StrainOutOfRange,
    /// Too few or degenerate calibration samples.
    #[error("calibration needs at least 3 samples with distinct elongations")]
    InsufficientData,
    /// A calibration sample held a non-finite or negative value.
    #[error("calibration sample {0} is non-finite or negative")]
    InvalidSample(usize),
}

/// Result of fitting the elastic term of the force law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticFit {
    /// Fitted `alpha * A_t` product (m^2).
    pub product: f64,
    /// Root-mean-square force residual at the fit (N).
    pub rms_residual: f64,
    /// True when the unconstrained fit came out negative and was clamped
    /// to zero.
    pub clamped: bool,
}

/// Fits the `alpha * A_t` product of the force law to measured
/// `(elongation m, force N)` samples, holding `e_mod`, `k_c`, and `l_i`
/// fixed at the values in `params`.
///
/// The two factors never appear separately in the model, so only their
/// product is identifiable. The fit is linear least squares on the
/// spring-corrected force; a negative optimum is clamped to zero and
/// flagged.
///
/// # Errors
///
/// [`MuscleError::InvalidSample`] on non-finite entries or negative
/// elongations; [`MuscleError::InsufficientData`] with fewer than 3
/// samples or without at least two distinct positive-weight elongations.
pub fn calibrate_elastic_term(
    samples: &[(f64, f64)],
    params: &MuscleParams,
) -> Result<ElasticFit, MuscleError> {
    for (i, &(x, f)) in samples.iter().enumerate() {
        if !(x.is_finite() && f.is_finite() && x >= 0.0) {
            return Err(MuscleError::InvalidSample(i));
        }
    }
    if samples.len() < 3 {
        return Err(MuscleError::InsufficientData);
    }
    let distinct = samples
        .iter()
        .any(|&(x, _)| (x - samples[0].0).abs() > f64::EPSILON * samples[0].0.abs());
    // The regressor vanishes at x = 0, so at least one sample must sit at
    // a strictly positive elongation for the product to be identifiable.
    let informative = samples.iter().any(|&(x, _)| x > 0.0);
    if !distinct || !informative {
        return Err(MuscleError::InsufficientData);
    }

    // Model: F = product * w(x) + k_c x with w = E (1 - 1/(1 + x/l_i)).
    // Least squares over the single coefficient has the closed form
    // product = sum(w y) / sum(w^2) with y = F - k_c x.
    let mut swy = 0.0;
    let mut sww = 0.0;
    for &(x, f) in samples {
        let w = params.e_mod * (1.0 - 1.0 / (1.0 + x / params.l_i));
        let y = f - params.k_c * x;
        swy += w * y;
        sww += w * w;
    }
    let raw = swy / sww;
    let (product, clamped) = if raw < 0.0 { (0.0, true) } else { (raw, false) };

    let mut sq = 0.0;
    for &(x, f) in samples {
        let w = params.e_mod * (1.0 - 1.0 / (1.0 + x / params.l_i));
        let r = f - (product * w + params.k_c * x);
        sq += r * r;
    }
    let rms_residual = (sq / samples.len() as f64).sqrt();
    Ok(ElasticFit { product, rms_residual, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture() -> MuscleParams {
        MuscleParams::default()
    }

    #[test]
    fn test_defaults_validate() {
        fixture().validate().unwrap();
        SyringeParams::default().validate().unwrap();
    }

    #[test]
    fn test_validate_rejects_swallowed_cross_section() {
        let p = MuscleParams { a_t: 7e-6, ..fixture() };
        assert_eq!(p.validate().unwrap_err().field, "a_t");
    }

    #[test]
    fn test_force_zero_at_rest() {
        assert_eq!(fixture().force(0.0).unwrap(), 0.0);
    }

    #[test]
    fn test_force_frozen_example() {
        // Terms computed by hand: elastic 0.5 * 1.2556e6 * 3e-6 * (1 - 1/1.2)
        // = 0.31390 N, spring 126 * 0.06 = 7.560 N.
        let f = fixture().force(0.06).unwrap();
        assert_relative_eq!(f, 0.31390 + 7.560, max_relative = 1e-5);
        assert_relative_eq!(f, 7.8739, max_relative = 1e-5);
    }

    #[test]
    fn test_force_area_scales_elastic_term_only() {
        let p = fixture();
        let doubled = MuscleParams { a_t: 2.0 * p.a_t, d_o: 4e-3, ..p };
        let x = 0.08;
        let f1 = p.force(x).unwrap();
        let f2 = doubled.force(x).unwrap();
        let spring = p.k_c * x;
        assert_relative_eq!(f2 - spring, 2.0 * (f1 - spring), max_relative = 1e-12);
    }

    #[test]
    fn test_force_domain_boundaries() {
        let p = fixture();
        assert!(p.force(p.max_elongation()).is_ok());
        assert_eq!(p.force(p.max_elongation() + 1e-9), Err(MuscleError::ElongationOutOfRange));
        assert_eq!(p.force(-1e-9), Err(MuscleError::ElongationOutOfRange));
        assert_eq!(p.force(f64::NAN), Err(MuscleError::ElongationOutOfRange));
    }

    #[test]
    fn test_force_strictly_monotone_on_grid() {
        let p = fixture();
        let mut last = -1.0;
        for i in 0..=1000 {
            let x = p.max_elongation() * i as f64 / 1000.0;
            let f = p.force(x).unwrap();
            assert!(f > last, "force not increasing at x = {x}");
            last = f;
        }
    }

    #[test]
    fn test_total_force_multiplies_by_count() {
        let p = fixture();
        let f = p.force(0.05).unwrap();
        assert_relative_eq!(p.total_force(0.05).unwrap(), 5.0 * f, max_relative = 1e-12);
    }

    #[test]
    fn test_pressure_frozen_example() {
        // Denominator by hand: pi/4 * (2e-3)^2 - 0.5 * 3e-6 / 1.2
        // = 3.14159e-6 - 1.25e-6 = 1.89159e-6 m^2.
        let p = fixture();
        let f = p.force(0.06).unwrap();
        let pressure = p.required_pressure(f, 0.06).unwrap();
        assert_relative_eq!(pressure, 4.1626e6, max_relative = 1e-4);
    }

    #[test]
    fn test_pressure_zero_force() {
        assert_eq!(fixture().required_pressure(0.0, 0.03).unwrap(), 0.0);
    }

    #[test]
    fn test_pressure_degenerate_geometry() {
        // Unvalidated parameters where the pre-stretched tubule fills the
        // whole cross-section.
        let p = MuscleParams { a_t: 1e-5, ..fixture() };
        assert_eq!(p.required_pressure(1.0, 0.0), Err(MuscleError::DegenerateGeometry));
    }

    #[test]
    fn test_pressure_composition_well_posed() {
        let p = fixture();
        for i in 1..=1000 {
            let x = p.max_elongation() * i as f64 / 1000.0;
            let pr = p.required_pressure(p.force(x).unwrap(), x).unwrap();
            assert!(pr.is_finite() && pr > 0.0, "pressure {pr} at x = {x}");
        }
    }

    #[test]
    fn test_thrust_design_point() {
        let s = SyringeParams::default();
        let thrust = actuator_thrust(3.81e6, &s, 5);
        assert_relative_eq!(thrust, 1055.37, max_relative = 1e-5);
        assert!((thrust - 1055.2).abs() / 1055.2 < 0.005);
    }

    #[test]
    fn test_thrust_single_muscle() {
        let s = SyringeParams::default();
        assert_relative_eq!(actuator_thrust(3.81e6, &s, 1), 211.074, max_relative = 1e-5);
    }

    #[test]
    fn test_thrust_bilinear() {
        let s = SyringeParams::default();
        assert_eq!(actuator_thrust(0.0, &s, 5), 0.0);
        let base = actuator_thrust(1e6, &s, 5);
        assert_relative_eq!(actuator_thrust(3e6, &s, 5), 3.0 * base, max_relative = 1e-12);
        let wider = SyringeParams { piston_area: 2.0 * s.piston_area, ..s };
        assert_relative_eq!(actuator_thrust(1e6, &wider, 5), 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn test_stroke_strain_anchors() {
        let s = SyringeParams::default();
        let full = s.full_stroke();
        assert_relative_eq!(full, 0.036101, max_relative = 1e-4);
        assert_relative_eq!(s.strain_for_stroke(full).unwrap(), 0.2, max_relative = 1e-12);
        assert_relative_eq!(s.strain_for_stroke(full / 2.0).unwrap(), 0.1, max_relative = 1e-12);
        assert_eq!(s.strain_for_stroke(0.0).unwrap(), 0.0);
    }

    #[test]
    fn test_stroke_strain_domains() {
        let s = SyringeParams::default();
        assert_eq!(s.strain_for_stroke(-1e-6), Err(MuscleError::StrokeOutOfRange));
        assert_eq!(s.strain_for_stroke(s.full_stroke() * 1.001), Err(MuscleError::StrokeOutOfRange));
        assert_eq!(s.stroke_for_strain(0.21), Err(MuscleError::StrainOutOfRange));
        assert_eq!(s.stroke_for_strain(-0.01), Err(MuscleError::StrainOutOfRange));
    }

    #[test]
    fn test_stroke_strain_round_trip() {
        let s = SyringeParams::default();
        for i in 0..=100 {
            let strain = 0.2 * i as f64 / 100.0;
            let back = s.strain_for_stroke(s.stroke_for_strain(strain).unwrap()).unwrap();
            assert_abs_diff_eq!(back, strain, epsilon = 1e-14);
        }
    }

    /// Calibration fixture with a fatter tubule so the elastic term is a
    /// meaningful share of the total force.
    fn calib_fixture() -> MuscleParams {
        MuscleParams { a_t: 3e-5, d_o: 5e-3, ..MuscleParams::default() }
    }

    fn synth_samples(p: &MuscleParams, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = p.max_elongation() * i as f64 / (n - 1) as f64;
                (x, p.force(x).unwrap())
            })
            .collect()
    }

    #[test]
    fn test_calibration_noiseless_round_trip() {
        let p = calib_fixture();
        p.validate().unwrap();
        let fit = calibrate_elastic_term(&synth_samples(&p, 16), &p).unwrap();
        let truth = p.alpha * p.a_t;
        assert!((fit.product - truth).abs() / truth < 1e-9);
        assert!(!fit.clamped);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn test_calibration_pure_spring_returns_zero() {
        let p = calib_fixture();
        let samples: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let x = 0.01 * i as f64;
                (x, p.k_c * x)
            })
            .collect();
        let fit = calibrate_elastic_term(&samples, &p).unwrap();
        assert_eq!(fit.product, 0.0);
        assert!(!fit.clamped);
    }

    #[test]
    fn test_calibration_clamps_negative_optimum() {
        let p = calib_fixture();
        // Forces sit below the bare spring line, which no non-negative
        // product can reach.
        let samples: Vec<(f64, f64)> =
            (0..10).map(|i| (0.01 * i as f64, 0.9 * p.k_c * 0.01 * i as f64)).collect();
        let fit = calibrate_elastic_term(&samples, &p).unwrap();
        assert_eq!(fit.product, 0.0);
        assert!(fit.clamped);
        assert!(fit.rms_residual > 0.0);
    }

    #[test]
    fn test_calibration_noise_recovery_monte_carlo() {
        // 5% multiplicative noise, 100 seeded trials; the estimator is
        // unbiased so the trial mean must land close to the truth.
        let p = calib_fixture();
        let truth = p.alpha * p.a_t;
        let clean = synth_samples(&p, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut sum = 0.0;
        for _ in 0..100 {
            let noisy: Vec<(f64, f64)> = clean
                .iter()
                .map(|&(x, f)| (x, f * (1.0 + 0.05 * rng.random_range(-1.732..1.732))))
                .collect();
            sum += calibrate_elastic_term(&noisy, &p).unwrap().product;
        }
        let mean = sum / 100.0;
        assert!(
            (mean - truth).abs() / truth < 0.10,
            "mean recovered {mean} vs truth {truth}"
        );
    }

    #[test]
    fn test_calibration_rejects_degenerate_inputs() {
        let p = calib_fixture();
        assert_eq!(
            calibrate_elastic_term(&[(0.0, 0.0), (0.1, 5.0)], &p),
            Err(MuscleError::InsufficientData)
        );
        assert_eq!(
            calibrate_elastic_term(&[(0.1, 5.0), (0.1, 5.1), (0.1, 4.9)], &p),
            Err(MuscleError::InsufficientData)
        );
        assert_eq!(
            calibrate_elastic_term(&[(0.0, 0.0), (0.1, f64::NAN), (0.2, 9.0)], &p),
            Err(MuscleError::InvalidSample(1))
        );
        assert_eq!(
            calibrate_elastic_term(&[(-0.1, 0.0), (0.1, 5.0), (0.2, 9.0)], &p),
            Err(MuscleError::InvalidSample(0))
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn force_monotone_for_valid_params(
                alpha in 0.1f64..1.0,
                a_t_frac in 0.05f64..0.9,
                k_c in 1.0f64..1000.0,
                l_i in 0.05f64..1.0,
                d_o in 1e-3f64..1e-2,
                x_lo in 0.0f64..0.49,
                dx in 1e-6f64..0.01,
            ) {
                let a_t = a_t_frac * core::f64::consts::FRAC_PI_4 * d_o * d_o / alpha;
                let p = MuscleParams { alpha, e_mod: 1.2556e6, a_t, k_c, l_i, d_o, n_muscles: 3 };
                prop_assume!(p.validate().is_ok());
                let x1 = x_lo * l_i;
                let x2 = (x_lo + dx).min(0.5) * l_i;
                prop_assume!(x2 > x1);
                prop_assert!(p.force(x2).unwrap() > p.force(x1).unwrap());
            }

            #[test]
            fn pressure_positive_for_positive_force(
                x_frac in 0.001f64..0.5,
            ) {
                let p = MuscleParams::default();
                let x = x_frac * p.l_i;
                let f = p.force(x).unwrap();
                let pr = p.required_pressure(f, x).unwrap();
                prop_assert!(pr > 0.0 && pr.is_finite());
            }
        }
    }
}
