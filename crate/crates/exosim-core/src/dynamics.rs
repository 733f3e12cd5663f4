//! Planar two-link dynamics of a stoop lift.
//!
//! The skeleton is reduced to two rigid links moving in the sagittal
//! plane: a lower segment from the hip joint to the lumbosacral joint and
//! an upper segment from the lumbosacral joint to the hands, where an
//! optional point load rides. Joint angles are measured from the upright
//! vertical and are positive leaning forward, so `angles = [0.0, 0.0]` is
//! standing and a stoop flexes both joints through positive angles. The
//! world frame has `+x` pointing forward and `+y` up, with the origin at
//! the hip.
//!
//! The equations of motion take the familiar manipulator form
//!
//! ```text
//! M(q) qdd + C(q, qd) qd + G(q) = tau + J(q)^T f_hand - J2^T tau_assist
//! ```
//!
//! where `tau` holds the torques the subject supplies, `f_hand` is an
//! external planar force at the hands, and `tau_assist` is an extension
//! assist acting about the lumbosacral joint only (`J2 = [0 1]`, the
//! suit pulls the trunk back toward upright). `G` is the gradient of the
//! gravitational potential; with flexion positive, holding a stoop takes
//! negative (extensor) joint torques, and a positive assist shrinks their
//! magnitude one-for-one. The Coriolis matrix is assembled from
//! Christoffel symbols, which makes `Mdot - 2C` skew-symmetric and keeps
//! the integrator's energy bookkeeping honest.
//!
//! Integration is fixed-step classic Runge-Kutta; [`MAX_STEP_DT`] caps the
//! step size well inside the stability region for human-scale lifts.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::{require_non_negative, require_positive, InvalidParam};

/// Hard upper bound on the integration step size (s).
pub const MAX_STEP_DT: f64 = 0.01;

/// Geometry and inertia of one body segment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentParams {
    /// Distance between the proximal and distal joints (m).
    pub length: f64,
    /// Segment mass (kg).
    pub mass: f64,
    /// Distance from the proximal joint to the centre of mass (m).
    pub com_offset: f64,
    /// Rotational inertia about the centre of mass (kg m^2).
    pub inertia: f64,
}

impl SegmentParams {
    fn validate(&self, which: &'static str) -> Result<(), InvalidParam> {
        // Field names are reported per segment so config errors stay actionable.
        let (len_f, mass_f, com_f, inertia_f) = if which == "lower" {
            ("lower.length", "lower.mass", "lower.com_offset", "lower.inertia")
        } else {
            ("upper.length", "upper.mass", "upper.com_offset", "upper.inertia")
        };
        require_positive(self.length, len_f)?;
        require_positive(self.mass, mass_f)?;
        require_positive(self.com_offset, com_f)?;
        require_positive(self.inertia, inertia_f)?;
        if self.com_offset > self.length {
            return Err(InvalidParam::new(com_f, "must not exceed the segment length"));
        }
        Ok(())
    }
}

/// Two-segment sagittal model of a person performing a stoop lift.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnthropometricModel {
    /// Hip-to-lumbosacral segment.
    pub lower: SegmentParams,
    /// Lumbosacral-to-hands segment.
    pub upper: SegmentParams,
    /// Point load carried at the hands (kg).
    pub load_mass: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
}

impl AnthropometricModel {
    /// Geometric test scaffold with adult-scale masses.
    ///
    /// These values exercise the dynamics at realistic magnitudes; they are
    /// not measurements of any subject. Real segment parameters should be
    /// supplied through configuration.
    #[must_use]
    pub fn bench_adult() -> Self {
        Self {
            lower: SegmentParams { length: 0.5, mass: 10.0, com_offset: 0.25, inertia: 0.2 },
            upper: SegmentParams { length: 0.5, mass: 30.0, com_offset: 0.25, inertia: 0.6 },
            load_mass: 0.0,
            gravity: 9.81,
        }
    }

    /// Reduced-scale subject used by the shipped demonstration scenario.
    ///
    /// Sized so that the peak lumbar demand of the default lift is a few
    /// newton-metres, the regime the 50 N assist with its 0.05 m lever was
    /// designed around. Segment masses are deliberately not anthropometric.
    #[must_use]
    pub fn design_point_subject() -> Self {
        Self {
            lower: SegmentParams { length: 0.15, mass: 3.0, com_offset: 0.08, inertia: 0.02 },
            upper: SegmentParams { length: 0.22, mass: 3.0, com_offset: 0.09, inertia: 0.03 },
            load_mass: 5.0,
            gravity: 9.81,
        }
    }

    /// Checks every parameter range. Call once before simulating.
    pub fn validate(&self) -> Result<(), InvalidParam> {
        self.lower.validate("lower")?;
        self.upper.validate("upper")?;
        require_non_negative(self.load_mass, "load_mass")?;
        require_positive(self.gravity, "gravity")?;
        Ok(())
    }

    /// Lumped coefficients of the equations of motion.
    ///
    /// `a`, `b`, `h` parameterise the mass matrix, `ga`, `gb` the gravity
    /// vector; all are constant for fixed parameters.
    fn coefficients(&self) -> (f64, f64, f64, f64, f64) {
        let l1 = self.lower.length;
        let l2 = self.upper.length;
        let (m1, r1, i1) = (self.lower.mass, self.lower.com_offset, self.lower.inertia);
        let (m2, r2, i2) = (self.upper.mass, self.upper.com_offset, self.upper.inertia);
        let ml = self.load_mass;
        let a = i1 + m1 * r1 * r1 + (m2 + ml) * l1 * l1;
        let b = i2 + m2 * r2 * r2 + ml * l2 * l2;
        let h = m2 * l1 * r2 + ml * l1 * l2;
        let ga = self.gravity * (m1 * r1 + (m2 + ml) * l1);
        let gb = self.gravity * (m2 * r2 + ml * l2);
        (a, b, h, ga, gb)
    }

    /// Joint-space mass matrix `M(q)`; symmetric positive definite.
    ///
    /// Depends on the posture only through the relative (lumbosacral)
    /// angle.
    #[must_use]
    pub fn mass_matrix(&self, angles: [f64; 2]) -> [[f64; 2]; 2] {
        let (a, b, h, _, _) = self.coefficients();
        let c2 = angles[1].cos();
        let m12 = b + h * c2;
        [[a + b + 2.0 * h * c2, m12], [m12, b]]
    }

    /// Coriolis/centrifugal matrix `C(q, qd)` from Christoffel symbols.
    ///
    /// Satisfies the skew-symmetry identity: `Mdot - 2C` is skew.
    #[must_use]
    pub fn coriolis_matrix(&self, state: &JointState) -> [[f64; 2]; 2] {
        let (_, _, h, _, _) = self.coefficients();
        let k = -h * state.angles[1].sin();
        let [w1, w2] = state.velocities;
        [[k * w2, k * (w1 + w2)], [-k * w1, 0.0]]
    }

    /// Gravity torque vector `G(q) = dV/dq` (N m).
    ///
    /// Zero when upright; negative components in a forward stoop, meaning
    /// the subject must supply extensor torque to hold the posture.
    #[must_use]
    pub fn gravity_vector(&self, angles: [f64; 2]) -> [f64; 2] {
        let (_, _, _, ga, gb) = self.coefficients();
        let s1 = angles[0].sin();
        let s12 = (angles[0] + angles[1]).sin();
        [-(ga * s1 + gb * s12), -gb * s12]
    }

    /// Gravitational potential energy with the hip as height reference (J).
    #[must_use]
    pub fn potential_energy(&self, angles: [f64; 2]) -> f64 {
        let (_, _, _, ga, gb) = self.coefficients();
        ga * angles[0].cos() + gb * (angles[0] + angles[1]).cos()
    }

    /// Kinetic energy of both segments and the load (J).
    #[must_use]
    pub fn kinetic_energy(&self, state: &JointState) -> f64 {
        let m = self.mass_matrix(state.angles);
        let [w1, w2] = state.velocities;
        0.5 * (m[0][0] * w1 * w1 + 2.0 * m[0][1] * w1 * w2 + m[1][1] * w2 * w2)
    }

    /// World position of the hands (m).
    #[must_use]
    pub fn endpoint_position(&self, angles: [f64; 2]) -> [f64; 2] {
        let l1 = self.lower.length;
        let l2 = self.upper.length;
        let (s1, c1) = angles[0].sin_cos();
        let (s12, c12) = (angles[0] + angles[1]).sin_cos();
        [l1 * s1 + l2 * s12, l1 * c1 + l2 * c12]
    }

    /// Endpoint Jacobian `J = d(endpoint)/d(angles)`.
    ///
    /// Maps joint rates to the hand velocity; its transpose maps a hand
    /// force to joint torques.
    #[must_use]
    pub fn endpoint_jacobian(&self, angles: [f64; 2]) -> [[f64; 2]; 2] {
        let l1 = self.lower.length;
        let l2 = self.upper.length;
        let (s1, c1) = angles[0].sin_cos();
        let (s12, c12) = (angles[0] + angles[1]).sin_cos();
        [[l1 * c1 + l2 * c12, l2 * c12], [-l1 * s1 - l2 * s12, -l2 * s12]]
    }

    /// Joint torques the subject must supply to realise `accel` (N m).
    ///
    /// `tau = M qdd + C qd + G - J^T f_hand + [0, assist]`. The assist
    /// enters the lumbosacral component only and shifts it by exactly
    /// `+assist`, shrinking the extensor demand of a stoop one-for-one.
    #[must_use]
    pub fn inverse_dynamics(
        &self,
        state: &JointState,
        accel: [f64; 2],
        hand_force: [f64; 2],
        assist: f64,
    ) -> [f64; 2] {
        let m = self.mass_matrix(state.angles);
        let c = self.coriolis_matrix(state);
        let g = self.gravity_vector(state.angles);
        let j = self.endpoint_jacobian(state.angles);
        let [w1, w2] = state.velocities;
        let jt_f = [
            j[0][0] * hand_force[0] + j[1][0] * hand_force[1],
            j[0][1] * hand_force[0] + j[1][1] * hand_force[1],
        ];
        [
            m[0][0] * accel[0] + m[0][1] * accel[1] + c[0][0] * w1 + c[0][1] * w2 + g[0] - jt_f[0],
            m[1][0] * accel[0] + m[1][1] * accel[1] + c[1][0] * w1 + c[1][1] * w2 + g[1] - jt_f[1]
                + assist,
        ]
    }

    /// Joint accelerations produced by the applied `drive` (rad/s^2).
    #[must_use]
    pub fn forward_dynamics(&self, state: &JointState, drive: &TorqueSet) -> [f64; 2] {
        let m = self.mass_matrix(state.angles);
        let c = self.coriolis_matrix(state);
        let g = self.gravity_vector(state.angles);
        let j = self.endpoint_jacobian(state.angles);
        let [w1, w2] = state.velocities;
        let f = drive.hand_force;
        let rhs = [
            drive.joint[0] + j[0][0] * f[0] + j[1][0] * f[1] - c[0][0] * w1 - c[0][1] * w2 - g[0],
            drive.joint[1] + j[0][1] * f[0] + j[1][1] * f[1] - drive.assist
                - c[1][0] * w1
                - c[1][1] * w2
                - g[1],
        ];
        // M is SPD for every validated model (det = ab - h^2 cos^2 >= ab - h^2 > 0).
        // A non-finite incoming state yields NaN here; the caller maps the
        // resulting NaN accelerations to an error, so only assert on real ones.
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        debug_assert!(!det.is_finite() || det > 0.0, "mass matrix must stay positive definite");
        [
            (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
            (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
        ]
    }

    /// Advances the state by one classic Runge-Kutta step under a drive
    /// held constant across the step.
    ///
    /// # Errors
    ///
    /// [`DynamicsError::StepSizeOutOfRange`] unless `0 < dt <=`
    /// [`MAX_STEP_DT`]; [`DynamicsError::NonFiniteState`] if the updated
    /// state stops being finite (diverging inputs, non-finite drive).
    pub fn step_rk4(
        &self,
        state: &JointState,
        drive: &TorqueSet,
        dt: f64,
    ) -> Result<JointState, DynamicsError> {
        if !(dt > 0.0 && dt <= MAX_STEP_DT) {
            return Err(DynamicsError::StepSizeOutOfRange);
        }
        let deriv = |s: &JointState| (s.velocities, self.forward_dynamics(s, drive));
        let shift = |s: &JointState, d: &([f64; 2], [f64; 2]), h: f64| JointState {
            angles: [s.angles[0] + h * d.0[0], s.angles[1] + h * d.0[1]],
            velocities: [s.velocities[0] + h * d.1[0], s.velocities[1] + h * d.1[1]],
        };
        let k1 = deriv(state);
        let k2 = deriv(&shift(state, &k1, dt / 2.0));
        let k3 = deriv(&shift(state, &k2, dt / 2.0));
        let k4 = deriv(&shift(state, &k3, dt));
        let combine = |i: usize| {
            (
                state.angles[i]
                    + dt / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]),
                state.velocities[i]
                    + dt / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]),
            )
        };
        let (q1, w1) = combine(0);
        let (q2, w2) = combine(1);
        let next = JointState { angles: [q1, q2], velocities: [w1, w2] };
        if next.is_finite() {
            Ok(next)
        } else {
            Err(DynamicsError::NonFiniteState)
        }
    }
}

/// Joint angles and angular velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointState {
    /// Hip and lumbosacral angles from vertical, flexion positive (rad).
    pub angles: [f64; 2],
    /// Angular velocities (rad/s).
    pub velocities: [f64; 2],
}

impl JointState {
    /// True when every component is finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.angles.iter().chain(self.velocities.iter()).all(|v| v.is_finite())
    }
}

/// Generalised forces applied to the linkage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TorqueSet {
    /// Active torques at the hip and lumbosacral joints (N m).
    pub joint: [f64; 2],
    /// External planar force on the hands, +x forward, +y up (N).
    pub hand_force: [f64; 2],
    /// Extension assist magnitude about the lumbosacral joint (N m).
    pub assist: f64,
}

impl TorqueSet {
    /// No applied torques or forces.
    pub const ZERO: TorqueSet = TorqueSet { joint: [0.0; 2], hand_force: [0.0; 2], assist: 0.0 };
}

/// Integration failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    /// `dt` fell outside `(0, MAX_STEP_DT]`.
    #[error("step size must lie in (0, 0.01] s")]
    StepSizeOutOfRange,
    /// A state component became NaN or infinite.
    #[error("state became non-finite during integration")]
    NonFiniteState,
}

/// One sample of a prescribed joint trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectorySample {
    /// Time since the start of the motion (s).
    pub time: f64,
    /// Joint angles (rad).
    pub angles: [f64; 2],
    /// Joint velocities (rad/s).
    pub velocities: [f64; 2],
    /// Joint accelerations (rad/s^2).
    pub accelerations: [f64; 2],
}

impl TrajectorySample {
    /// The kinematic state at this sample.
    #[must_use]
    pub fn state(&self) -> JointState {
        JointState { angles: self.angles, velocities: self.velocities }
    }
}

/// A uniformly sampled joint trajectory.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    /// Sample spacing (s).
    pub dt: f64,
    /// Samples from `t = 0` to the effective duration inclusive.
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Time of the final sample (s).
    #[must_use]
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }
}

/// Septic smoothstep: value and first two derivatives at `s` in `[0, 1]`.
///
/// Value rises 0 to 1 with zero velocity, acceleration, and jerk at both
/// ends, so two halves joined back to back stay C^3 through the seam.
fn smoothstep7(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let oms = 1.0 - s;
    let value = s3 * s * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s3);
    let d1 = 140.0 * s3 * oms * oms * oms;
    let d2 = 420.0 * s2 * oms * oms * (1.0 - 2.0 * s);
    (value, d1, d2)
}

/// Generates a symmetric down-and-up lift: rest, smooth flexion to `peaks`
/// at half time, smooth return to rest.
///
/// Boundary velocity and acceleration are exactly zero and the peak is hit
/// exactly at `duration / 2`. The duration is rounded to a whole number of
/// steps so the endpoints land on the sample grid.
///
/// # Errors
///
/// [`InvalidParam`] when `peaks` are non-finite, `duration`/`dt` are not
/// positive, or the motion spans fewer than two steps.
pub fn lift_trajectory(
    peaks: [f64; 2],
    duration: f64,
    dt: f64,
) -> Result<Trajectory, InvalidParam> {
    if !(peaks[0].is_finite() && peaks[1].is_finite()) {
        return Err(InvalidParam::new("peaks", "must be finite"));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(InvalidParam::new("duration", "must be finite and > 0"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(InvalidParam::new("dt", "must be finite and > 0"));
    }
    let steps = (duration / dt).round();
    if steps < 2.0 {
        return Err(InvalidParam::new("duration", "must span at least two steps of dt"));
    }
    if steps > 5e7 {
        return Err(InvalidParam::new("dt", "resolves the duration into too many steps"));
    }
    let steps = steps as usize;
    let total = steps as f64 * dt;
    let half = total / 2.0;
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = i as f64 * dt;
        // Rising half maps t in [0, half] to s in [0, 1]; falling half
        // mirrors it. ds/dt carries the sign of the phase.
        let (s, ds) = if t <= half { (t / half, 1.0 / half) } else { ((total - t) / half, -1.0 / half) };
        let (v, d1, d2) = smoothstep7(s);
        let mut sample = TrajectorySample {
            time: t,
            angles: [0.0; 2],
            velocities: [0.0; 2],
            accelerations: [0.0; 2],
        };
        for (axis, peak) in peaks.iter().enumerate() {
            sample.angles[axis] = peak * v;
            sample.velocities[axis] = peak * d1 * ds;
            sample.accelerations[axis] = peak * d2 * ds * ds;
        }
        samples.push(sample);
    }
    Ok(Trajectory { dt, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Fixture used throughout: adult-scale scaffold, no load.
    fn fixture() -> AnthropometricModel {
        AnthropometricModel::bench_adult()
    }

    fn fixture_loaded(load: f64) -> AnthropometricModel {
        AnthropometricModel { load_mass: load, ..AnthropometricModel::bench_adult() }
    }

    /// Independent oracle built from bare geometry: positions of the two
    /// segment centres of mass and the endpoint, their velocities from
    /// direct differentiation, and the energies summed mass by mass. None
    /// of it touches the closed-form M/C/G expressions under test.
    mod oracle {
        use super::super::AnthropometricModel;

        pub fn positions(m: &AnthropometricModel, q: [f64; 2]) -> [[f64; 2]; 3] {
            let q12 = q[0] + q[1];
            let c1 = [m.lower.com_offset * q[0].sin(), m.lower.com_offset * q[0].cos()];
            let base = [m.lower.length * q[0].sin(), m.lower.length * q[0].cos()];
            let c2 = [base[0] + m.upper.com_offset * q12.sin(), base[1] + m.upper.com_offset * q12.cos()];
            let end = [base[0] + m.upper.length * q12.sin(), base[1] + m.upper.length * q12.cos()];
            [c1, c2, end]
        }

        /// Velocities of the three mass points for joint rates `w`.
        pub fn velocities(m: &AnthropometricModel, q: [f64; 2], w: [f64; 2]) -> [[f64; 2]; 3] {
            let q12 = q[0] + q[1];
            let w12 = w[0] + w[1];
            let v1 = [
                m.lower.com_offset * q[0].cos() * w[0],
                -m.lower.com_offset * q[0].sin() * w[0],
            ];
            let vbase = [
                m.lower.length * q[0].cos() * w[0],
                -m.lower.length * q[0].sin() * w[0],
            ];
            let v2 = [
                vbase[0] + m.upper.com_offset * q12.cos() * w12,
                vbase[1] - m.upper.com_offset * q12.sin() * w12,
            ];
            let vend = [
                vbase[0] + m.upper.length * q12.cos() * w12,
                vbase[1] - m.upper.length * q12.sin() * w12,
            ];
            [v1, v2, vend]
        }

        pub fn kinetic(m: &AnthropometricModel, q: [f64; 2], w: [f64; 2]) -> f64 {
            let [v1, v2, vend] = velocities(m, q, w);
            let sq = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
            let w12 = w[0] + w[1];
            0.5 * m.lower.mass * sq(v1)
                + 0.5 * m.lower.inertia * w[0] * w[0]
                + 0.5 * m.upper.mass * sq(v2)
                + 0.5 * m.upper.inertia * w12 * w12
                + 0.5 * m.load_mass * sq(vend)
        }

        pub fn potential(m: &AnthropometricModel, q: [f64; 2]) -> f64 {
            let [c1, c2, end] = positions(m, q);
            m.gravity * (m.lower.mass * c1[1] + m.upper.mass * c2[1] + m.load_mass * end[1])
        }

        /// Mass matrix from second differences of the kinetic energy in the
        /// joint rates (exact for a quadratic form).
        pub fn mass_by_polarization(m: &AnthropometricModel, q: [f64; 2]) -> [[f64; 2]; 2] {
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let mut ei = [0.0; 2];
                    let mut ej = [0.0; 2];
                    ei[i] = 1.0;
                    ej[j] = 1.0;
                    let eij = [ei[0] + ej[0], ei[1] + ej[1]];
                    out[i][j] = kinetic(m, q, eij) - kinetic(m, q, ei) - kinetic(m, q, ej);
                }
            }
            out
        }

        /// Gravity torques from central differences of the potential.
        pub fn gravity_by_fd(m: &AnthropometricModel, q: [f64; 2]) -> [f64; 2] {
            let h = 1e-5;
            let mut out = [0.0; 2];
            for (axis, slot) in out.iter_mut().enumerate() {
                let mut lo = q;
                let mut hi = q;
                lo[axis] -= h;
                hi[axis] += h;
                *slot = (potential(m, hi) - potential(m, lo)) / (2.0 * h);
            }
            out
        }

        /// Static holding torques from per-mass gravitational moments about
        /// each joint: the torque resisting gravity is -g * m * (x - x_joint)
        /// summed over the masses distal to the joint.
        pub fn static_moment_sum(m: &AnthropometricModel, q: [f64; 2]) -> [f64; 2] {
            let [c1, c2, end] = positions(m, q);
            let hip_x = 0.0;
            let lumbo_x = m.lower.length * q[0].sin();
            let hip = -m.gravity
                * (m.lower.mass * (c1[0] - hip_x)
                    + m.upper.mass * (c2[0] - hip_x)
                    + m.load_mass * (end[0] - hip_x));
            let lumbo = -m.gravity
                * (m.upper.mass * (c2[0] - lumbo_x) + m.load_mass * (end[0] - lumbo_x));
            [hip, lumbo]
        }

        /// Velocity-product force from the Lagrangian using the polarization
        /// mass matrix: `Mdot w - 1/2 d(w^T M w)/dq`, derivatives by central
        /// differences.
        pub fn coriolis_force_by_fd(
            m: &AnthropometricModel,
            q: [f64; 2],
            w: [f64; 2],
        ) -> [f64; 2] {
            let h = 1e-6;
            let quad = |q: [f64; 2]| {
                let mm = mass_by_polarization(m, q);
                mm[0][0] * w[0] * w[0] + 2.0 * mm[0][1] * w[0] * w[1] + mm[1][1] * w[1] * w[1]
            };
            let mdot = {
                let mut lo = q;
                let mut hi = q;
                for axis in 0..2 {
                    lo[axis] -= h * w[axis];
                    hi[axis] += h * w[axis];
                }
                let a = mass_by_polarization(m, hi);
                let b = mass_by_polarization(m, lo);
                let mut d = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        d[i][j] = (a[i][j] - b[i][j]) / (2.0 * h);
                    }
                }
                d
            };
            let mut out = [0.0; 2];
            for (axis, slot) in out.iter_mut().enumerate() {
                let mut lo = q;
                let mut hi = q;
                lo[axis] -= h;
                hi[axis] += h;
                let grad = (quad(hi) - quad(lo)) / (2.0 * h);
                *slot = mdot[axis][0] * w[0] + mdot[axis][1] * w[1] - 0.5 * grad;
            }
            out
        }
    }

    fn random_angles(rng: &mut ChaCha8Rng) -> [f64; 2] {
        [rng.random_range(-core::f64::consts::PI..core::f64::consts::PI),
         rng.random_range(-core::f64::consts::PI..core::f64::consts::PI)]
    }

    #[test]
    fn test_fixture_validates() {
        fixture().validate().unwrap();
        fixture_loaded(5.0).validate().unwrap();
        AnthropometricModel::design_point_subject().validate().unwrap();
    }

    #[test]
    fn test_validate_rejects_bad_fields() {
        let mut m = fixture();
        m.lower.mass = 0.0;
        assert_eq!(m.validate().unwrap_err().field, "lower.mass");
        let mut m = fixture();
        m.upper.com_offset = m.upper.length * 2.0;
        assert_eq!(m.validate().unwrap_err().field, "upper.com_offset");
        let mut m = fixture();
        m.load_mass = -1.0;
        assert_eq!(m.validate().unwrap_err().field, "load_mass");
    }

    #[test]
    fn test_mass_matrix_matches_kinetic_energy_hessian() {
        let m = fixture();
        let q = [0.6, -0.4];
        let expect = oracle::mass_by_polarization(&m, q);
        let got = m.mass_matrix(q);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(got[i][j], expect[i][j], max_relative = 1e-6);
            }
        }
        // Loaded variant exercises the point-mass terms.
        let ml = fixture_loaded(5.0);
        let expect = oracle::mass_by_polarization(&ml, q);
        let got = ml.mass_matrix(q);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(got[i][j], expect[i][j], max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn test_mass_matrix_symmetric_positive_definite_over_1000_states() {
        let m = fixture_loaded(5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let q = random_angles(&mut rng);
            let mm = m.mass_matrix(q);
            assert_eq!(mm[0][1], mm[1][0]);
            let det = mm[0][0] * mm[1][1] - mm[0][1] * mm[1][0];
            assert!(mm[0][0] > 0.0 && det > 0.0, "not SPD at {q:?}: {mm:?}");
        }
    }

    #[test]
    fn test_mass_matrix_depends_only_on_relative_angle() {
        let m = fixture();
        let a = m.mass_matrix([0.3, core::f64::consts::FRAC_PI_2]);
        let b = m.mass_matrix([-1.1, -core::f64::consts::FRAC_PI_2]);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(a[i][j], b[i][j], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn test_coriolis_skew_symmetry_identity() {
        let m = fixture_loaded(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..100 {
            let q = random_angles(&mut rng);
            let w = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let state = JointState { angles: q, velocities: w };
            let c = m.coriolis_matrix(&state);
            // Mdot along the actual motion direction.
            let hi = m.mass_matrix([q[0] + h * w[0], q[1] + h * w[1]]);
            let lo = m.mass_matrix([q[0] - h * w[0], q[1] - h * w[1]]);
            let mut s = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] = (hi[i][j] - lo[i][j]) / (2.0 * h) - 2.0 * c[i][j];
                }
            }
            for _ in 0..100 {
                let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let quad = v[0] * (s[0][0] * v[0] + s[0][1] * v[1])
                    + v[1] * (s[1][0] * v[0] + s[1][1] * v[1]);
                assert!(quad.abs() < 1e-8, "v^T (Mdot - 2C) v = {quad} at {q:?} {w:?}");
            }
        }
    }

    #[test]
    fn test_coriolis_matches_lagrangian_velocity_terms() {
        let m = fixture_loaded(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q = random_angles(&mut rng);
            let w = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let state = JointState { angles: q, velocities: w };
            let c = m.coriolis_matrix(&state);
            let got = [
                c[0][0] * w[0] + c[0][1] * w[1],
                c[1][0] * w[0] + c[1][1] * w[1],
            ];
            let expect = oracle::coriolis_force_by_fd(&m, q, w);
            assert_abs_diff_eq!(got[0], expect[0], epsilon = 1e-5);
            assert_abs_diff_eq!(got[1], expect[1], epsilon = 1e-5);
        }
    }

    #[test]
    fn test_coriolis_vanishes_at_zero_velocity() {
        let m = fixture();
        let state = JointState { angles: [0.9, -0.3], velocities: [0.0, 0.0] };
        assert_eq!(m.coriolis_matrix(&state), [[0.0; 2]; 2]);
    }

    #[test]
    fn test_gravity_matches_potential_gradient() {
        let m = fixture();
        // Trunk horizontal.
        let q = [core::f64::consts::FRAC_PI_2, 0.0];
        let got = m.gravity_vector(q);
        let expect = oracle::gravity_by_fd(&m, q);
        assert_abs_diff_eq!(got[0], expect[0], epsilon = 1e-6);
        assert_abs_diff_eq!(got[1], expect[1], epsilon = 1e-6);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ml = fixture_loaded(5.0);
        for _ in 0..200 {
            let q = random_angles(&mut rng);
            let got = ml.gravity_vector(q);
            let expect = oracle::gravity_by_fd(&ml, q);
            assert_abs_diff_eq!(got[0], expect[0], epsilon = 1e-5);
            assert_abs_diff_eq!(got[1], expect[1], epsilon = 1e-5);
        }
    }

    #[test]
    fn test_gravity_zero_upright_and_scales_with_g() {
        let m = fixture();
        assert_eq!(m.gravity_vector([0.0, 0.0]), [0.0, 0.0]);
        let mut doubled = m;
        doubled.gravity *= 2.0;
        let q = [0.5, 0.3];
        let g1 = m.gravity_vector(q);
        let g2 = doubled.gravity_vector(q);
        assert_relative_eq!(g2[0], 2.0 * g1[0], max_relative = 1e-12);
        assert_relative_eq!(g2[1], 2.0 * g1[1], max_relative = 1e-12);
    }

    #[test]
    fn test_energies_match_oracle() {
        let m = fixture_loaded(4.0);
        let q = [0.7, 0.25];
        let w = [1.2, -0.8];
        let state = JointState { angles: q, velocities: w };
        assert_relative_eq!(m.kinetic_energy(&state), oracle::kinetic(&m, q, w), max_relative = 1e-12);
        assert_relative_eq!(m.potential_energy(q), oracle::potential(&m, q), max_relative = 1e-12);
    }

    #[test]
    fn test_jacobian_matches_forward_kinematics_differencing() {
        let m = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-7;
        for _ in 0..100 {
            let q = random_angles(&mut rng);
            let j = m.endpoint_jacobian(q);
            for axis in 0..2 {
                let mut hi = q;
                let mut lo = q;
                hi[axis] += h;
                lo[axis] -= h;
                let ph = m.endpoint_position(hi);
                let pl = m.endpoint_position(lo);
                for row in 0..2 {
                    let fd = (ph[row] - pl[row]) / (2.0 * h);
                    assert_abs_diff_eq!(j[row][axis], fd, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn test_upright_downward_hand_force_maps_to_zero_torque() {
        let m = fixture();
        let j = m.endpoint_jacobian([0.0, 0.0]);
        let f = [0.0, -5.0 * 9.81];
        let tau = [j[0][0] * f[0] + j[1][0] * f[1], j[0][1] * f[0] + j[1][1] * f[1]];
        assert_abs_diff_eq!(tau[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tau[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn test_inverse_dynamics_static_upright_is_zero() {
        let m = fixture();
        let state = JointState::default();
        let tau = m.inverse_dynamics(&state, [0.0; 2], [0.0; 2], 0.0);
        assert_abs_diff_eq!(tau[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tau[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn test_inverse_dynamics_static_stoop_matches_moment_sum() {
        let m = fixture_loaded(5.0);
        let q = [45f64.to_radians(), 15f64.to_radians()];
        let state = JointState { angles: q, velocities: [0.0; 2] };
        let tau = m.inverse_dynamics(&state, [0.0; 2], [0.0; 2], 0.0);
        let expect = oracle::static_moment_sum(&m, q);
        assert_relative_eq!(tau[0], expect[0], max_relative = 1e-6);
        assert_relative_eq!(tau[1], expect[1], max_relative = 1e-6);
        // Holding a stoop is extensor work: negative in this convention.
        assert!(tau[0] < 0.0 && tau[1] < 0.0);
    }

    #[test]
    fn test_inverse_dynamics_linear_in_assist() {
        let m = fixture_loaded(5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let state = JointState {
                angles: random_angles(&mut rng),
                velocities: [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
            };
            let accel = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let delta = rng.random_range(0.0..10.0);
            let base = m.inverse_dynamics(&state, accel, [0.0; 2], 0.0);
            let assisted = m.inverse_dynamics(&state, accel, [0.0; 2], delta);
            assert_relative_eq!(assisted[0], base[0], max_relative = 1e-12);
            assert_abs_diff_eq!(assisted[1] - base[1], delta, epsilon = 1e-12);
        }
        // In a stoop the lumbosacral torque is negative, so a positive
        // assist shrinks the magnitude the subject must supply.
        let state = JointState { angles: [0.7, 0.26], velocities: [0.0; 2] };
        let base = m.inverse_dynamics(&state, [0.0; 2], [0.0; 2], 0.0);
        let assisted = m.inverse_dynamics(&state, [0.0; 2], [0.0; 2], 2.5);
        assert!(assisted[1].abs() < base[1].abs());
    }

    #[test]
    fn test_forward_inverse_consistency() {
        let m = fixture_loaded(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let state = JointState {
                angles: random_angles(&mut rng),
                velocities: [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
            };
            let accel = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
            let hand = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            let assist = rng.random_range(0.0..3.0);
            let tau = m.inverse_dynamics(&state, accel, hand, assist);
            let back = m.forward_dynamics(
                &state,
                &TorqueSet { joint: tau, hand_force: hand, assist },
            );
            assert_abs_diff_eq!(back[0], accel[0], epsilon = 1e-9);
            assert_abs_diff_eq!(back[1], accel[1], epsilon = 1e-9);
        }
    }

    #[test]
    fn test_step_rk4_conserves_energy_unforced() {
        let m = fixture();
        let mut state = JointState { angles: [0.3, 0.2], velocities: [0.0, 0.0] };
        let e0 = m.kinetic_energy(&state) + m.potential_energy(state.angles);
        let dt = 1e-3;
        for _ in 0..2000 {
            state = m.step_rk4(&state, &TorqueSet::ZERO, dt).unwrap();
        }
        let e1 = m.kinetic_energy(&state) + m.potential_energy(state.angles);
        assert!(
            (e1 - e0).abs() <= 1e-3 * e0.abs(),
            "energy drifted from {e0} to {e1} over 2 s"
        );
    }

    #[test]
    fn test_step_rk4_rejects_bad_dt() {
        let m = fixture();
        let s = JointState::default();
        assert_eq!(m.step_rk4(&s, &TorqueSet::ZERO, 0.0), Err(DynamicsError::StepSizeOutOfRange));
        assert_eq!(m.step_rk4(&s, &TorqueSet::ZERO, -1e-3), Err(DynamicsError::StepSizeOutOfRange));
        assert_eq!(m.step_rk4(&s, &TorqueSet::ZERO, 0.02), Err(DynamicsError::StepSizeOutOfRange));
        assert!(m.step_rk4(&s, &TorqueSet::ZERO, 0.01).is_ok());
    }

    #[test]
    fn test_step_rk4_flags_non_finite() {
        let m = fixture();
        let s = JointState::default();
        let drive = TorqueSet { joint: [f64::INFINITY, 0.0], ..TorqueSet::ZERO };
        assert_eq!(m.step_rk4(&s, &drive, 1e-3), Err(DynamicsError::NonFiniteState));
    }

    #[test]
    fn test_trajectory_boundary_and_peak() {
        let peaks = [core::f64::consts::FRAC_PI_4, 0.2617993877991494];
        let traj = lift_trajectory(peaks, 4.0, 1e-3).unwrap();
        assert_eq!(traj.samples.len(), 4001);
        let first = traj.samples.first().unwrap();
        let last = traj.samples.last().unwrap();
        for s in [first, last] {
            assert_eq!(s.angles, [0.0, 0.0]);
            assert_eq!(s.velocities, [0.0, 0.0]);
            assert_eq!(s.accelerations, [0.0, 0.0]);
        }
        let mid = &traj.samples[2000];
        assert_eq!(mid.angles[0], peaks[0]);
        assert_eq!(mid.angles[1], peaks[1]);
        assert_eq!(mid.velocities, [0.0, 0.0]);
        // The peak is the maximum over the whole motion.
        for s in &traj.samples {
            assert!(s.angles[0] <= peaks[0] + 1e-15);
        }
    }

    #[test]
    fn test_trajectory_derivatives_match_finite_differences() {
        let traj = lift_trajectory([core::f64::consts::FRAC_PI_4, 0.2617993877991494], 4.0, 1e-3).unwrap();
        let dt = traj.dt;
        for i in 1..traj.samples.len() - 1 {
            let prev = &traj.samples[i - 1];
            let next = &traj.samples[i + 1];
            let here = &traj.samples[i];
            for axis in 0..2 {
                let vel_fd = (next.angles[axis] - prev.angles[axis]) / (2.0 * dt);
                let acc_fd = (next.velocities[axis] - prev.velocities[axis]) / (2.0 * dt);
                assert_abs_diff_eq!(here.velocities[axis], vel_fd, epsilon = 1e-4);
                assert_abs_diff_eq!(here.accelerations[axis], acc_fd, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn test_trajectory_rejects_degenerate_inputs() {
        assert!(lift_trajectory([f64::NAN, 0.0], 4.0, 1e-3).is_err());
        assert!(lift_trajectory([0.5, 0.1], 0.0, 1e-3).is_err());
        assert!(lift_trajectory([0.5, 0.1], 4.0, 0.0).is_err());
        assert!(lift_trajectory([0.5, 0.1], 1e-3, 1e-3).is_err());
    }

    #[test]
    fn test_inverse_then_forward_reproduces_trajectory_stepwise() {
        let m = fixture_loaded(5.0);
        let traj = lift_trajectory([core::f64::consts::FRAC_PI_4, 0.2617993877991494], 4.0, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for i in 0..traj.samples.len() - 1 {
            let here = &traj.samples[i];
            let next = &traj.samples[i + 1];
            let tau = m.inverse_dynamics(&here.state(), here.accelerations, [0.0; 2], 0.0);
            let stepped = m
                .step_rk4(&here.state(), &TorqueSet { joint: tau, ..TorqueSet::ZERO }, traj.dt)
                .unwrap();
            for axis in 0..2 {
                worst = worst.max((stepped.angles[axis] - next.angles[axis]).abs());
            }
        }
        assert!(worst < 1e-6, "worst per-step angle error {worst}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mass_matrix_spd_everywhere(
                q1 in -3.2f64..3.2,
                q2 in -3.2f64..3.2,
                load in 0.0f64..20.0,
            ) {
                let m = fixture_loaded(load);
                let mm = m.mass_matrix([q1, q2]);
                prop_assert_eq!(mm[0][1], mm[1][0]);
                prop_assert!(mm[0][0] > 0.0);
                prop_assert!(mm[0][0] * mm[1][1] - mm[0][1] * mm[1][0] > 0.0);
            }

            #[test]
            fn gravity_gradient_holds_under_load(
                q1 in -3.0f64..3.0,
                q2 in -3.0f64..3.0,
                load in 0.0f64..20.0,
            ) {
                let m = fixture_loaded(load);
                let got = m.gravity_vector([q1, q2]);
                let expect = oracle::gravity_by_fd(&m, [q1, q2]);
                prop_assert!((got[0] - expect[0]).abs() < 1e-5);
                prop_assert!((got[1] - expect[1]).abs() < 1e-5);
            }
        }
    }
}
