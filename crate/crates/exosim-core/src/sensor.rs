//! Knitted hydraulic strain sensor: geometry, pressure model, inversion,
//! and calibration.
//!
//! The sensor is a sealed silicone tube knitted into a row of interlocking
//! loops. One knit repeat consists of a loop arc, a straight tangent
//! segment between neighbouring loops, and a short knot arc where the tube
//! crosses itself. Stretching the row axially pulls the loop centres
//! apart and tightens each loop, which lengthens the repeat path. With
//! the helical constraint blocking radial expansion, the trapped fluid
//! responds to the longer path with a pressure drop, so inner pressure is
//! a proxy for strain:
//!
//! ```text
//! P(strain) = P_init * L(0) / L(strain)
//! ```
//!
//! The loop kinematics under strain are
//!
//! ```text
//! delta_d = strain * (2 g_i cos(phi_c) + d2)
//! g_p^2   = (delta_d / 2)^2 + g_i^2
//!           - ((1 + strain)^2 - 1) * ((d1^2 + d2^2) / 4 - g_i^2)
//! ```
//!
//! and the repeat path is assembled from tangent-line geometry: with
//! `R' = sqrt(d1^2 + (d2 + delta_d)^2) / 2` the half centre distance,
//! `phi_d' = atan(d1 / (d2 + delta_d))` the centre-line inclination and
//! `phi_i' = asin(g_p / R')` the tangent contact angle,
//!
//! ```text
//! L = g_p * (pi - phi_d' - phi_c - phi_i') + sqrt(R'^2 - g_p^2) + 2 g_i phi_c
//! ```
//!
//! The knot arc keeps the rest radius `g_i` in both states; the knot is a
//! tied crossing that does not tighten with the loop. At zero strain the
//! stretched and rest paths coincide term by term, so `P(0) = P_init`
//! holds exactly by construction.
//!
//! Increasing strain eventually drives `g_p^2` negative or breaks the
//! tangent construction; [`SensorGeometry::max_strain`] reports how far a
//! given geometry stays valid, and everything downstream confines itself
//! to that range.

#[allow(unused_imports)]
use num_traits::Float;

use crate::{require_positive, InvalidParam};

/// Strain-grid resolution used when scanning for the validity limit.
const STRAIN_SCAN_STEP: f64 = 5e-4;

/// Upper bound of the validity scan; no knit stretches past 100%.
const STRAIN_SCAN_LIMIT: f64 = 1.0;

/// Knit-loop geometry and tube ratings of one sensor.
///
/// `d1` and `d2` are the horizontal and vertical components of the loop
/// centre spacing as they appear in the loop equations; `g_i` is the rest
/// radius of the loop semicircle and `phi_c` the knot angle from
/// vertical. The tube fields feed Barlow's formula for the pressure
/// rating.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorGeometry {
    /// Horizontal loop-centre spacing component (m).
    pub d1: f64,
    /// Vertical loop-centre spacing component (m).
    pub d2: f64,
    /// Rest loop radius (m).
    pub g_i: f64,
    /// Knot angle from vertical (rad), in `(0, pi/2)`.
    pub phi_c: f64,
    /// Inner pressure of the sealed tube at rest (Pa).
    pub p_init: f64,
    /// Tube wall thickness (m).
    pub t_wall: f64,
    /// Allowable wall stress (Pa).
    pub s_allow: f64,
    /// Tube outside diameter (m).
    pub d_tube: f64,
}

impl Default for SensorGeometry {
    /// Synthetic reference geometry.
    ///
    /// The loop parameters are a calibration product, not measurements:
    /// [`fit_geometry`] was run against the rest pressure of 300 kPa and a
    /// 90 kPa drop at 20% strain, and the result frozen here. See the
    /// `regenerate_default_geometry` test for the procedure.
    // Digits kept exactly as the regenerate test prints them.
    #[allow(clippy::excessive_precision)]
    fn default() -> Self {
        Self {
            d1: 3.0e-3,
            d2: 1.0375807868086399e-3,
            g_i: 1.3971170191642590e-3,
            phi_c: 6.4264799814824594e-2,
            p_init: 300e3,
            t_wall: 0.5e-3,
            s_allow: 10e6,
            d_tube: 2e-3,
        }
    }
}

impl SensorGeometry {
    /// Half distance between neighbouring loop centres at rest (m).
    fn rest_half_distance(&self) -> f64 {
        (self.d1 * self.d1 + self.d2 * self.d2).sqrt() / 2.0
    }

    /// Checks parameter ranges and that the rest-state repeat path is
    /// constructible.
    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_positive(self.d1, "d1")?;
        require_positive(self.d2, "d2")?;
        require_positive(self.g_i, "g_i")?;
        require_positive(self.p_init, "p_init")?;
        require_positive(self.t_wall, "t_wall")?;
        require_positive(self.s_allow, "s_allow")?;
        require_positive(self.d_tube, "d_tube")?;
        if !(self.phi_c.is_finite() && self.phi_c > 0.0 && self.phi_c < core::f64::consts::FRAC_PI_2)
        {
            return Err(InvalidParam::new("phi_c", "must lie in (0, pi/2)"));
        }
        if self.g_i >= self.rest_half_distance() {
            return Err(InvalidParam::new(
                "g_i",
                "must stay below sqrt(d1^2 + d2^2) / 2 so the tangent exists",
            ));
        }
        if self.t_wall >= self.d_tube / 2.0 {
            return Err(InvalidParam::new("t_wall", "must be below half the tube diameter"));
        }
        // The rest path must assemble into positive arc angles; a knot
        // angle near pi/2 with steep centre lines can break this.
        if self.path_length(&self.stretch(0.0).map_err(|_| {
            InvalidParam::new("g_i", "rest geometry does not close")
        })?)
        .is_err()
        {
            return Err(InvalidParam::new("phi_c", "rest-state loop arc is negative"));
        }
        Ok(())
    }

    /// Loop kinematics at `strain`.
    ///
    /// # Errors
    ///
    /// [`SensorError::InvalidStrain`] for negative or non-finite strain;
    /// [`SensorError::GeometryCollapse`] when the loop radius square goes
    /// non-positive, meaning the geometry cannot accommodate the strain.
    pub fn stretch(&self, strain: f64) -> Result<StretchedLoop, SensorError> {
        if !(strain.is_finite() && strain >= 0.0) {
            return Err(SensorError::InvalidStrain);
        }
        if strain == 0.0 {
            // Exact rest state; keeps P(0) = P_init an identity.
            return Ok(StretchedLoop { strain: 0.0, delta_d: 0.0, g_p: self.g_i });
        }
        let delta_d = strain * (2.0 * self.g_i * self.phi_c.cos() + self.d2);
        let half = self.rest_half_distance();
        let tangent_sq_rest = half * half - self.g_i * self.g_i;
        let g_p_sq = (delta_d / 2.0) * (delta_d / 2.0) + self.g_i * self.g_i
            - ((1.0 + strain) * (1.0 + strain) - 1.0) * tangent_sq_rest;
        if g_p_sq <= 0.0 {
            return Err(SensorError::GeometryCollapse);
        }
        Ok(StretchedLoop { strain, delta_d, g_p: g_p_sq.sqrt() })
    }

    /// Length of one knit repeat for the given loop state (m).
    ///
    /// # Errors
    ///
    /// [`SensorError::GeometryCollapse`] when the tangent segment or the
    /// loop arc cannot be constructed at this state.
    pub fn path_length(&self, state: &StretchedLoop) -> Result<f64, SensorError> {
        let stretched_d2 = self.d2 + state.delta_d;
        let half = (self.d1 * self.d1 + stretched_d2 * stretched_d2).sqrt() / 2.0;
        if state.g_p >= half {
            return Err(SensorError::GeometryCollapse);
        }
        let tangent = (half * half - state.g_p * state.g_p).sqrt();
        let phi_d = (self.d1 / stretched_d2).atan();
        let phi_i = (state.g_p / half).asin();
        let loop_angle = core::f64::consts::PI - phi_d - self.phi_c - phi_i;
        if loop_angle < 0.0 {
            return Err(SensorError::GeometryCollapse);
        }
        Ok(state.g_p * loop_angle + tangent + 2.0 * self.g_i * self.phi_c)
    }

    /// Inner pressure at `strain` (Pa); `p_init` at rest, strictly
    /// decreasing over the valid range.
    ///
    /// # Errors
    ///
    /// Propagates [`SensorGeometry::stretch`] and
    /// [`SensorGeometry::path_length`] failures.
    pub fn pressure_at_strain(&self, strain: f64) -> Result<f64, SensorError> {
        let rest_len = self.path_length(&self.stretch(0.0)?)?;
        let len = self.path_length(&self.stretch(strain)?)?;
        Ok(self.p_init * rest_len / len)
    }

    /// Largest strain this geometry handles, found by grid scan.
    ///
    /// Valid means: the loop kinematics solve, the repeat path
    /// constructs, the loop keeps tightening (`g_p <= g_i`), and pressure
    /// keeps strictly falling. The scan walks a 5e-4 strain grid, stops
    /// at the first violation, and backs the result off by one grid cell:
    /// a smooth path-length curve that turns around inside a cell can
    /// still net an increase across it, so only the cells before the last
    /// accepted one certify pointwise monotonicity. Geometries whose
    /// response dies within the first two cells report zero.
    #[must_use]
    pub fn max_strain(&self) -> f64 {
        let Ok(rest) = self.stretch(0.0) else { return 0.0 };
        let Ok(mut last_len) = self.path_length(&rest) else { return 0.0 };
        let mut valid = 0.0;
        let steps = (STRAIN_SCAN_LIMIT / STRAIN_SCAN_STEP) as usize;
        for i in 1..=steps {
            let s = i as f64 * STRAIN_SCAN_STEP;
            let Ok(state) = self.stretch(s) else { break };
            if state.g_p > self.g_i {
                break;
            }
            let Ok(len) = self.path_length(&state) else { break };
            if len <= last_len {
                break;
            }
            last_len = len;
            valid = s;
        }
        (valid - STRAIN_SCAN_STEP).max(0.0)
    }

    /// Strain whose model pressure equals `pressure`, by bisection on the
    /// monotone forward model.
    ///
    /// The result reproduces `pressure` within 1 Pa and round-trips a
    /// forward evaluation within 1e-6 strain.
    ///
    /// # Errors
    ///
    /// [`SensorError::OutOfCalibratedRange`] when `pressure` exceeds
    /// `p_init` or undershoots the pressure at the validity limit.
    pub fn strain_from_pressure(&self, pressure: f64) -> Result<f64, SensorError> {
        if !pressure.is_finite() || pressure > self.p_init {
            return Err(SensorError::OutOfCalibratedRange);
        }
        if pressure == self.p_init {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = self.max_strain();
        let floor = self.pressure_at_strain(hi).map_err(|_| SensorError::OutOfCalibratedRange)?;
        if pressure < floor {
            return Err(SensorError::OutOfCalibratedRange);
        }
        // Pressure falls as strain rises, so the bracket is [lo, hi] with
        // P(lo) >= pressure >= P(hi).
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            let p_mid = self.pressure_at_strain(mid).map_err(|_| SensorError::OutOfCalibratedRange)?;
            if p_mid >= pressure {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Mean pressure-drop slope over the first 20% strain, in kPa per
    /// percent strain; by definition `(p_init - P(0.2)) / 20` in kPa.
    ///
    /// # Errors
    ///
    /// Propagates forward-model failures when the geometry does not reach
    /// 20% strain.
    pub fn sensitivity(&self) -> Result<f64, SensorError> {
        let p_final = self.pressure_at_strain(0.2)?;
        Ok((self.p_init - p_final) / 1e3 / 20.0)
    }

    /// Barlow rating of this sensor's tube (Pa).
    ///
    /// # Errors
    ///
    /// See [`barlow_pressure`].
    pub fn barlow_limit(&self) -> Result<f64, SensorError> {
        barlow_pressure(self.t_wall, self.s_allow, self.d_tube)
    }
}

/// Loop state at one strain value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StretchedLoop {
    /// Axial strain (dimensionless).
    pub strain: f64,
    /// Increase of the vertical centre spacing (m).
    pub delta_d: f64,
    /// Tightened loop radius (m).
    pub g_p: f64,
}

/// Allowable inner pressure of a tube by Barlow's formula, `2 T S / D`
/// (Pa). Linear in wall thickness and stress, inverse in diameter.
///
/// # Errors
///
/// [`SensorError::InvalidWall`] unless `0 < t_wall < d_tube / 2` and
/// `s_allow > 0`.
pub fn barlow_pressure(t_wall: f64, s_allow: f64, d_tube: f64) -> Result<f64, SensorError> {
    let positive = t_wall > 0.0 && s_allow > 0.0 && d_tube > 0.0;
    if !(positive && t_wall < d_tube / 2.0) {
        return Err(SensorError::InvalidWall);
    }
    Ok(2.0 * t_wall * s_allow / d_tube)
}

/// Sensor-model failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SensorError {
    /// Strain was negative or non-finite.
    #[error("strain must be finite and non-negative")]
    InvalidStrain,
    /// The loop geometry cannot accommodate the requested strain.
    #[error("loop geometry collapses at this strain")]
    GeometryCollapse,
    /// Measured pressure lies outside the invertible model range.
    #[error("pressure outside the calibrated range of the sensor model")]
    OutOfCalibratedRange,
    /// Tube wall parameters violate Barlow preconditions.
    #[error("wall thickness must be positive and below half the tube diameter")]
    InvalidWall,
    /// Too few samples or too little strain coverage to fit.
    #[error("fitting needs at least 6 samples spanning at least 10% strain")]
    InsufficientData,
    /// The fit hit its iteration cap without settling, or settled on an
    /// invalid geometry.
    #[error("geometry fit failed to converge")]
    FitDiverged,
}

/// Knobs for [`fit_geometry`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Iteration cap for the damped Gauss-Newton search. One iteration is
    /// one linearization plus trial step; the default leaves generous
    /// headroom over typical convergence in a few dozen.
    pub max_iterations: usize,
    /// Also fit a strain offset modelling knot-slip delay before the
    /// loops start responding. Off by default.
    pub fit_strain_offset: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 500, fit_strain_offset: false }
    }
}

/// Result of a geometry calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryFit {
    /// Fitted geometry; `d1`, `p_init`, and the tube fields carry over
    /// from the seed.
    pub geometry: SensorGeometry,
    /// Fitted response delay (strain); zero unless enabled in options.
    pub strain_offset: f64,
    /// Coefficient of determination against the samples.
    pub r_squared: f64,
    /// Root-mean-square pressure residual (Pa).
    pub rms_residual: f64,
    /// Damped Gauss-Newton iterations consumed.
    pub iterations: usize,
}

/// Least-squares fit of the loop geometry to `(strain, pressure Pa)`
/// samples by damped Gauss-Newton (Levenberg-Marquardt) over
/// `(d2, g_i, phi_c)`.
///
/// The pressure model is a pure length ratio, so uniform scaling of all
/// lengths changes nothing; `d1` stays pinned at the seed value as the
/// scale gauge, and `p_init` carries over from the seed as the rest
/// anchor. Parameters move through smooth transforms that keep every
/// candidate inside the geometric invariants.
///
/// # Errors
///
/// [`SensorError::InsufficientData`] for fewer than 6 finite samples or
/// under 10% strain span; [`SensorError::FitDiverged`] when the samples
/// show no pressure variation, the search fails to settle within the
/// iteration cap, or the settled geometry is invalid.
pub fn fit_geometry(
    samples: &[(f64, f64)],
    seed: &SensorGeometry,
    options: &FitOptions,
) -> Result<GeometryFit, SensorError> {
    if samples.len() < 6
        || samples.iter().any(|&(s, p)| !(s.is_finite() && p.is_finite() && s >= 0.0))
    {
        return Err(SensorError::InsufficientData);
    }
    let (mut s_min, mut s_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(s, _) in samples {
        s_min = s_min.min(s);
        s_max = s_max.max(s);
    }
    if s_max - s_min < 0.10 {
        return Err(SensorError::InsufficientData);
    }
    let mean_p = samples.iter().map(|&(_, p)| p).sum::<f64>() / samples.len() as f64;
    let ss_tot = samples.iter().map(|&(_, p)| (p - mean_p) * (p - mean_p)).sum::<f64>();
    if ss_tot == 0.0 {
        return Err(SensorError::FitDiverged);
    }

    let dims = if options.fit_strain_offset { 4 } else { 3 };
    let residuals = |u: &[f64; 4], out: &mut [f64]| {
        let (geom, offset) = decode(u, seed, options.fit_strain_offset);
        for (slot, &(s, p)) in out.iter_mut().zip(samples) {
            let eff = (s - offset).max(0.0);
            *slot = match geom.pressure_at_strain(eff) {
                Ok(model) => model - p,
                // Flat wall that steers the search back toward
                // constructible shapes.
                Err(_) => 1e9,
            };
        }
    };

    let seed_u = encode(seed, options.fit_strain_offset);
    let (best_u, iterations) =
        levenberg_marquardt(&residuals, &seed_u, dims, samples.len(), options.max_iterations)
            .ok_or(SensorError::FitDiverged)?;

    let (geometry, strain_offset) = decode(&best_u, seed, options.fit_strain_offset);
    if geometry.validate().is_err() {
        return Err(SensorError::FitDiverged);
    }
    let mut res = alloc::vec![0.0; samples.len()];
    residuals(&best_u, &mut res);
    let ss_res: f64 = res.iter().map(|r| r * r).sum();
    Ok(GeometryFit {
        geometry,
        strain_offset,
        r_squared: 1.0 - ss_res / ss_tot,
        rms_residual: (ss_res / samples.len() as f64).sqrt(),
        iterations,
    })
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Transform-space seed for the search: `d2` and `g_i` through log,
/// `phi_c` as a logit fraction of pi/2, optional offset as a logit
/// fraction of 0.05. The tangent-existence constraint is not baked into
/// the transform; candidates that violate it fail to construct a path
/// and draw the residual penalty instead.
fn encode(seed: &SensorGeometry, with_offset: bool) -> [f64; 4] {
    [
        seed.d2.ln(),
        seed.g_i.ln(),
        logit((seed.phi_c / core::f64::consts::FRAC_PI_2).clamp(1e-6, 1.0 - 1e-6)),
        if with_offset { logit(0.1) } else { 0.0 },
    ]
}

fn decode(u: &[f64], seed: &SensorGeometry, with_offset: bool) -> (SensorGeometry, f64) {
    let d2 = u[0].exp();
    let g_i = u[1].exp();
    let phi_c = sigmoid(u[2]) * core::f64::consts::FRAC_PI_2;
    let offset = if with_offset { sigmoid(u[3]) * 0.05 } else { 0.0 };
    (SensorGeometry { d2, g_i, phi_c, ..*seed }, offset)
}

/// Damped Gauss-Newton (Levenberg-Marquardt) over the first `dims`
/// slots of a 4-vector. `residuals` fills `n_res` residual values for a
/// candidate. Returns the best point and iterations used, or None at the
/// iteration cap.
///
/// Each iteration linearizes the residuals by central differences and
/// solves the damped normal equations for a trial step. Accepted steps
/// relax the damping toward pure Gauss-Newton; rejected ones stiffen it
/// toward gradient descent. The search stops when an accepted step stops
/// paying (the residual floor, whether noise or float precision) or when
/// damping grows past any useful scale.
fn levenberg_marquardt(
    residuals: &dyn Fn(&[f64; 4], &mut [f64]),
    start: &[f64; 4],
    dims: usize,
    n_res: usize,
    max_iterations: usize,
) -> Option<([f64; 4], usize)> {
    const DIFF_STEP: f64 = 1e-6;
    const LAMBDA_UP: f64 = 4.0;
    const LAMBDA_DOWN: f64 = 3.0;
    const LAMBDA_CEILING: f64 = 1e12;
    // Transform-space trust bound. Near-flat directions otherwise invite
    // huge Newton steps that saturate the logit transform, zeroing its
    // gradient permanently.
    const MAX_STEP: f64 = 1.0;

    let mut point = *start;
    let mut res = alloc::vec![0.0; n_res];
    residuals(&point, &mut res);
    let mut sse: f64 = res.iter().map(|r| r * r).sum();
    let mut lambda = 1e-3;

    let mut jac = alloc::vec![0.0; n_res * dims];
    let mut plus = alloc::vec![0.0; n_res];
    let mut minus = alloc::vec![0.0; n_res];
    let mut trial_res = alloc::vec![0.0; n_res];

    for iter in 1..=max_iterations {
        if sse == 0.0 {
            return Some((point, iter));
        }
        for d in 0..dims {
            let mut probe = point;
            probe[d] += DIFF_STEP;
            residuals(&probe, &mut plus);
            probe[d] = point[d] - DIFF_STEP;
            residuals(&probe, &mut minus);
            for k in 0..n_res {
                jac[k * dims + d] = (plus[k] - minus[k]) / (2.0 * DIFF_STEP);
            }
        }

        let mut normal = [[0.0; 4]; 4];
        let mut gradient = [0.0; 4];
        for k in 0..n_res {
            let row = &jac[k * dims..(k + 1) * dims];
            for i in 0..dims {
                gradient[i] += row[i] * res[k];
                for j in 0..dims {
                    normal[i][j] += row[i] * row[j];
                }
            }
        }

        loop {
            let mut damped = normal;
            for (i, row) in damped.iter_mut().enumerate().take(dims) {
                row[i] += lambda * normal[i][i].max(1e-30);
            }
            let mut rhs = [0.0; 4];
            for i in 0..dims {
                rhs[i] = -gradient[i];
            }

            let step = solve_dense(&mut damped, &mut rhs, dims);
            let trial = step.map(|delta| {
                let mut t = point;
                for d in 0..dims {
                    t[d] += delta[d].clamp(-MAX_STEP, MAX_STEP);
                }
                t
            });
            let trial_sse = trial.map(|t| {
                residuals(&t, &mut trial_res);
                trial_res.iter().map(|r| r * r).sum::<f64>()
            });

            match (trial, trial_sse) {
                (Some(t), Some(s)) if s.is_finite() && s < sse => {
                    let gain = sse - s;
                    point = t;
                    core::mem::swap(&mut res, &mut trial_res);
                    sse = s;
                    lambda = (lambda / LAMBDA_DOWN).max(1e-12);
                    if gain <= 1e-12 * sse.max(f64::MIN_POSITIVE) {
                        return Some((point, iter));
                    }
                    break;
                }
                _ => {
                    lambda *= LAMBDA_UP;
                    if lambda > LAMBDA_CEILING {
                        // No direction improves at float precision.
                        return Some((point, iter));
                    }
                }
            }
        }
    }
    None
}

/// Gaussian elimination with partial pivoting on the leading
/// `dims`-square block; returns None for a singular system.
fn solve_dense(a: &mut [[f64; 4]; 4], b: &mut [f64; 4], dims: usize) -> Option<[f64; 4]> {
    for col in 0..dims {
        let pivot = (col..dims).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..dims {
            let factor = a[row][col] / a[col][col];
            let lead = a[col];
            for (entry, l) in a[row][col..dims].iter_mut().zip(&lead[col..dims]) {
                *entry -= factor * l;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..dims).rev() {
        let mut acc = b[col];
        for k in col + 1..dims {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Millimetre-scale worked example used for the kinematics oracles.
    fn mm_fixture() -> SensorGeometry {
        SensorGeometry {
            d1: 3e-3,
            d2: 4e-3,
            g_i: 2e-3,
            phi_c: 30f64.to_radians(),
            ..SensorGeometry::default()
        }
    }

    #[test]
    fn test_default_geometry_validates() {
        SensorGeometry::default().validate().unwrap();
        mm_fixture().validate().unwrap();
    }

    #[test]
    fn test_validate_rejects_bad_fields() {
        let base = SensorGeometry::default();
        let g = SensorGeometry { g_i: base.rest_half_distance() * 1.01, ..base };
        assert_eq!(g.validate().unwrap_err().field, "g_i");
        let g = SensorGeometry { phi_c: 1.6, ..base };
        assert_eq!(g.validate().unwrap_err().field, "phi_c");
        let g = SensorGeometry { t_wall: 1.1e-3, ..base };
        assert_eq!(g.validate().unwrap_err().field, "t_wall");
    }

    #[test]
    fn test_stretch_identity_at_zero() {
        let g = mm_fixture();
        let rest = g.stretch(0.0).unwrap();
        assert_eq!(rest.delta_d, 0.0);
        assert_eq!(rest.g_p, g.g_i);
    }

    #[test]
    fn test_stretch_frozen_example() {
        // By hand: delta_d = 0.2 (2 * 2 cos 30 + 4) mm = 1.49282 mm;
        // g_p^2 = 0.74641^2 + 4 - 0.44 * (25/4 - 4) = 3.56713 mm^2.
        let state = mm_fixture().stretch(0.2).unwrap();
        assert_relative_eq!(state.delta_d, 1.49282e-3, max_relative = 1e-5);
        assert_relative_eq!(state.g_p, 1.88867e-3, max_relative = 1e-5);
    }

    #[test]
    fn test_stretch_back_substitutes() {
        // Recovering delta_d from g_p inverts the radius equation, so the
        // two published relations are mutually consistent.
        let g = mm_fixture();
        let s = 0.2;
        let state = g.stretch(s).unwrap();
        let half = g.rest_half_distance();
        let k = half * half - g.g_i * g.g_i;
        let dd = 2.0
            * (state.g_p * state.g_p - g.g_i * g.g_i + ((1.0 + s) * (1.0 + s) - 1.0) * k)
                .sqrt();
        assert_abs_diff_eq!(dd, state.delta_d, epsilon = 1e-9);
    }

    #[test]
    fn test_stretch_collapse_on_tight_loops() {
        // A small rest radius leaves a long tangent, and its shortening
        // term overwhelms the radius budget well before 20% strain.
        let g = SensorGeometry { g_i: 0.8e-3, ..mm_fixture() };
        g.validate().unwrap();
        assert_eq!(g.stretch(0.2), Err(SensorError::GeometryCollapse));
    }

    #[test]
    fn test_stretch_rejects_bad_strain() {
        let g = mm_fixture();
        assert_eq!(g.stretch(-0.01), Err(SensorError::InvalidStrain));
        assert_eq!(g.stretch(f64::NAN), Err(SensorError::InvalidStrain));
    }

    #[test]
    fn test_loops_tighten_within_validity() {
        for g in [SensorGeometry::default(), mm_fixture()] {
            let cap = g.max_strain();
            assert!(cap > 0.0);
            for i in 0..=200 {
                let s = cap * i as f64 / 200.0;
                let state = g.stretch(s).unwrap();
                assert!(
                    state.g_p <= g.g_i + 1e-15,
                    "loop widened at strain {s}: g_p {} vs g_i {}",
                    state.g_p,
                    g.g_i
                );
            }
        }
    }

    #[test]
    fn test_pressure_exact_at_rest() {
        let g = SensorGeometry::default();
        assert_eq!(g.pressure_at_strain(0.0).unwrap(), g.p_init);
    }

    #[test]
    fn test_pressure_strictly_decreasing_on_grid() {
        let g = SensorGeometry::default();
        let mut last = f64::INFINITY;
        for i in 0..=200 {
            let s = 0.2 * i as f64 / 200.0;
            let p = g.pressure_at_strain(s).unwrap();
            assert!(p < last, "pressure not falling at strain {s}");
            last = p;
        }
    }

    #[test]
    fn test_default_geometry_hits_anchor_band() {
        let g = SensorGeometry::default();
        let p = g.pressure_at_strain(0.2).unwrap();
        assert!((p - 210e3).abs() < 15e3, "P(0.2) = {p}");
        let sens = g.sensitivity().unwrap();
        assert!((sens - 4.50).abs() < 0.45, "sensitivity {sens}");
        assert!(g.max_strain() > 0.22, "validity margin past 20%: {}", g.max_strain());
    }

    #[test]
    fn test_sensitivity_matches_definition() {
        let g = SensorGeometry::default();
        let expect = (g.p_init - g.pressure_at_strain(0.2).unwrap()) / 1e3 / 20.0;
        assert_relative_eq!(g.sensitivity().unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn test_sensitivity_linear_in_p_init() {
        let g = SensorGeometry::default();
        let doubled = SensorGeometry { p_init: 2.0 * g.p_init, ..g };
        assert_relative_eq!(
            doubled.sensitivity().unwrap(),
            2.0 * g.sensitivity().unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn test_barlow_frozen_example() {
        let p = barlow_pressure(0.5e-3, 10e6, 2e-3).unwrap();
        assert_relative_eq!(p, 5e6, max_relative = 1e-12);
        assert_relative_eq!(
            barlow_pressure(0.5e-3, 20e6, 2e-3).unwrap(),
            2.0 * p,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            barlow_pressure(0.5e-3, 10e6, 4e-3).unwrap(),
            p / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn test_barlow_rejects_thick_wall() {
        assert_eq!(barlow_pressure(1e-3, 10e6, 2e-3), Err(SensorError::InvalidWall));
        assert_eq!(barlow_pressure(0.0, 10e6, 2e-3), Err(SensorError::InvalidWall));
        assert_eq!(barlow_pressure(0.5e-3, -1.0, 2e-3), Err(SensorError::InvalidWall));
    }

    #[test]
    fn test_inversion_trivial_cases() {
        let g = SensorGeometry::default();
        assert_eq!(g.strain_from_pressure(g.p_init).unwrap(), 0.0);
        assert_eq!(
            g.strain_from_pressure(g.p_init + 10e3),
            Err(SensorError::OutOfCalibratedRange)
        );
        let floor = g.pressure_at_strain(g.max_strain()).unwrap();
        assert_eq!(
            g.strain_from_pressure(floor - 5e3),
            Err(SensorError::OutOfCalibratedRange)
        );
    }

    #[test]
    fn test_inversion_round_trip() {
        let g = SensorGeometry::default();
        for i in 0..=40 {
            let strain = 0.2 * i as f64 / 40.0;
            let p = g.pressure_at_strain(strain).unwrap();
            let back = g.strain_from_pressure(p).unwrap();
            assert!(
                (back - strain).abs() < 1e-6,
                "round trip {strain} -> {back}"
            );
            assert!((g.pressure_at_strain(back).unwrap() - p).abs() < 1.0);
        }
    }

    fn synth_samples(g: &SensorGeometry, n: usize, top: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let s = top * i as f64 / (n - 1) as f64;
                (s, g.pressure_at_strain(s).unwrap())
            })
            .collect()
    }

    #[test]
    fn test_fit_noiseless_recovery() {
        let truth = SensorGeometry::default();
        let samples = synth_samples(&truth, 12, 0.2);
        let seed = SensorGeometry {
            d2: truth.d2 * 1.15,
            g_i: truth.g_i * 0.92,
            phi_c: truth.phi_c * 1.3,
            ..truth
        };
        let fit = fit_geometry(&samples, &seed, &FitOptions::default()).unwrap();
        assert!(fit.r_squared > 0.9999, "r2 = {}", fit.r_squared);
        assert_relative_eq!(fit.geometry.d2, truth.d2, max_relative = 0.01);
        assert_relative_eq!(fit.geometry.g_i, truth.g_i, max_relative = 0.01);
        assert_relative_eq!(fit.geometry.phi_c, truth.phi_c, max_relative = 0.01);
    }

    #[test]
    fn test_fit_noisy_drop_quality() {
        // Multiplicative noise sits on the pressure drop, the quantity the
        // model actually predicts; rest pressure is a shared calibration
        // anchor, not a noisy observable.
        let truth = SensorGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let samples: Vec<(f64, f64)> = synth_samples(&truth, 25, 0.2)
            .into_iter()
            .map(|(s, p)| {
                let drop = (truth.p_init - p) * (1.0 + 0.02 * rng.random_range(-1.732..1.732));
                (s, truth.p_init - drop)
            })
            .collect();
        let seed = SensorGeometry { d2: truth.d2 * 0.9, g_i: truth.g_i * 1.05, ..truth };
        let fit = fit_geometry(&samples, &seed, &FitOptions::default()).unwrap();
        assert!(fit.r_squared >= 0.99, "r2 = {}", fit.r_squared);
    }

    #[test]
    fn test_fit_rejects_insufficient_data() {
        let g = SensorGeometry::default();
        let few = synth_samples(&g, 5, 0.2);
        assert_eq!(
            fit_geometry(&few, &g, &FitOptions::default()),
            Err(SensorError::InsufficientData)
        );
        let narrow = synth_samples(&g, 8, 0.05);
        assert_eq!(
            fit_geometry(&narrow, &g, &FitOptions::default()),
            Err(SensorError::InsufficientData)
        );
    }

    #[test]
    fn test_fit_constant_pressure_diverges() {
        let g = SensorGeometry::default();
        let flat: Vec<(f64, f64)> = (0..8).map(|i| (0.025 * i as f64, 250e3)).collect();
        assert_eq!(
            fit_geometry(&flat, &g, &FitOptions::default()),
            Err(SensorError::FitDiverged)
        );
    }

    /// Regenerates the shipped default geometry from the two calibration
    /// anchors. Run with `--ignored --nocapture` and paste the printed
    /// values into `SensorGeometry::default` if the anchors ever change.
    #[test]
    #[ignore]
    fn regenerate_default_geometry() {
        let seed = SensorGeometry {
            d1: 3e-3,
            d2: 1e-3,
            g_i: 1.4e-3,
            phi_c: 0.05,
            ..SensorGeometry::default()
        };
        let samples = [
            (0.0, 300e3),
            (0.0, 300e3),
            (0.0, 300e3),
            (0.2, 210e3),
            (0.2, 210e3),
            (0.2, 210e3),
        ];
        let fit = fit_geometry(&samples, &seed, &FitOptions::default()).unwrap();
        let g = fit.geometry;
        std::println!(
            "d2 = {:.16e}\ng_i = {:.16e}\nphi_c = {:.16e}\nr2 = {}\nP(0.2) = {}\nmax_strain = {}",
            g.d2,
            g.g_i,
            g.phi_c,
            fit.r_squared,
            g.pressure_at_strain(0.2).unwrap(),
            g.max_strain()
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pressure_monotone_within_validity(
                d1 in 1e-3f64..6e-3,
                d2 in 1e-3f64..6e-3,
                gi_frac in 0.3f64..0.95,
                phi_c in 0.02f64..0.8,
                pair in (0.0f64..1.0, 0.0f64..1.0),
            ) {
                let half = (d1 * d1 + d2 * d2).sqrt() / 2.0;
                let g = SensorGeometry {
                    d1,
                    d2,
                    g_i: gi_frac * half,
                    phi_c,
                    ..SensorGeometry::default()
                };
                prop_assume!(g.validate().is_ok());
                let cap = g.max_strain();
                prop_assume!(cap > 0.0);
                let (a, b) = pair;
                let s1 = cap * a.min(b);
                let s2 = cap * a.max(b);
                prop_assume!(s2 - s1 > 1e-9);
                let p1 = g.pressure_at_strain(s1).unwrap();
                let p2 = g.pressure_at_strain(s2).unwrap();
                prop_assert!(p2 < p1);
                prop_assert!(p1 <= g.p_init);
            }

            #[test]
            fn loops_tighten_within_validity(
                d1 in 1e-3f64..6e-3,
                d2 in 1e-3f64..6e-3,
                gi_frac in 0.3f64..0.95,
                phi_c in 0.02f64..0.8,
                frac in 0.0f64..1.0,
            ) {
                let half = (d1 * d1 + d2 * d2).sqrt() / 2.0;
                let g = SensorGeometry {
                    d1,
                    d2,
                    g_i: gi_frac * half,
                    phi_c,
                    ..SensorGeometry::default()
                };
                prop_assume!(g.validate().is_ok());
                let cap = g.max_strain();
                prop_assume!(cap > 0.0);
                let state = g.stretch(cap * frac).unwrap();
                prop_assert!(state.g_p <= g.g_i + 1e-15);
            }
        }
    }
}

