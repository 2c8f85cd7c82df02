//! Rigid-body plant: translational, rotational and attitude kinematics
//! integrated with classical fourth-order Runge-Kutta.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::aero::{Violation, Wrench};
use crate::spatial::{Mat3, Quaternion, Vec3};

/// Control and physics step, s (2 kHz).
pub const DEFAULT_DT: f64 = 1.0 / 2000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("non-finite {0} passed to the integrator")]
    NonFinite(&'static str),
    #[error("inertia matrix is singular")]
    SingularInertia,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Inertial position, m.
    pub position: Vec3,
    /// Inertial velocity, m/s.
    pub velocity: Vec3,
    /// Body-to-inertial attitude.
    pub attitude: Quaternion,
    /// Body angular velocity, rad/s.
    pub angular_velocity: Vec3,
    pub time: f64,
}

impl Default for VehicleState {
    fn default() -> Self {
        Self {
            position: Vec3::ZERO,
            velocity: Vec3::ZERO,
            attitude: Quaternion::IDENTITY,
            angular_velocity: Vec3::ZERO,
            time: 0.0,
        }
    }
}

impl VehicleState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.attitude.is_finite()
            && self.angular_velocity.is_finite()
            && self.time.is_finite()
    }

    /// Body `b3` axis expressed in the inertial frame.
    pub fn thrust_axis(&self) -> Vec3 {
        self.attitude.rotate(Vec3::Z)
    }
}

/// Sinusoidal roll/pitch torque standing in for flapping-induced body
/// vibration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vibration {
    /// Roll and pitch torque amplitudes, N m.
    pub amplitude: [f64; 2],
    pub frequency: f64,
    /// Phase of the pitch torque relative to roll, rad.
    pub pitch_phase: f64,
    /// Raised-cosine fade-in time, s. A sine torque switched on at rest
    /// leaves a mean body rate of `A / (J w)`; fading in removes it.
    pub ramp: f64,
}

impl Vibration {
    pub fn torque(&self, t: f64) -> Vec3 {
        let arg = TAU * self.frequency * t;
        let env = if t >= self.ramp {
            1.0
        } else {
            0.5 * (1.0 - (PI * t.max(0.0) / self.ramp).cos())
        };
        Vec3::new(
            env * self.amplitude[0] * arg.sin(),
            env * self.amplitude[1] * (arg + self.pitch_phase).sin(),
            0.0,
        )
    }

    /// Torque amplitude that makes a free body with moment of inertia
    /// `inertia` oscillate by `angle` radians at `frequency`.
    pub fn amplitude_for_angle(angle: f64, inertia: f64, frequency: f64) -> f64 {
        let w = TAU * frequency;
        angle * inertia * w * w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialConfig {
    pub mass: f64,
    inertia: Mat3,
    inertia_inv: Mat3,
    pub gravity: f64,
    /// Passive yaw damping, N m s/rad.
    pub yaw_damping: f64,
    pub vibration: Option<Vibration>,
}

impl InertialConfig {
    pub fn new(mass: f64, inertia: Mat3, gravity: f64) -> Result<Self, DynamicsError> {
        let inertia_inv = inertia.inverse().ok_or(DynamicsError::SingularInertia)?;
        Ok(Self {
            mass,
            inertia,
            inertia_inv,
            gravity,
            yaw_damping: 0.0,
            vibration: None,
        })
    }

    /// 95 mg vehicle with a diagonal inertia placeholder
    /// `diag(1.5, 1.5, 0.5) x 1e-9 kg m^2`; damping and vibration off.
    pub fn four_wing() -> Self {
        Self::new(95e-6, Mat3::diag(Vec3::new(1.5e-9, 1.5e-9, 0.5e-9)), 9.81)
            .expect("diagonal inertia is invertible")
    }

    pub fn with_yaw_damping(mut self, b: f64) -> Self {
        self.yaw_damping = b;
        self
    }

    pub fn with_vibration(mut self, v: Vibration) -> Self {
        self.vibration = Some(v);
        self
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.mass > 0.0) {
            out.push(Violation::new("vehicle.mass_mg", "mass must be positive"));
        }
        if !(self.gravity > 0.0) {
            out.push(Violation::new(
                "vehicle.gravity_m_s2",
                "gravity must be positive",
            ));
        }
        if !self.inertia.is_symmetric(1e-24) {
            out.push(Violation::new(
                "vehicle.inertia",
                "inertia must be symmetric",
            ));
        }
        if !self.inertia.is_positive_definite() {
            out.push(Violation::new(
                "vehicle.inertia",
                "inertia must be positive definite",
            ));
        }
        if !(self.yaw_damping >= 0.0) {
            out.push(Violation::new(
                "vehicle.yaw_damping",
                "yaw damping must be non-negative",
            ));
        }
        if let Some(v) = self.vibration {
            if !(v.frequency > 0.0) || !v.amplitude.iter().all(|a| a.is_finite()) {
                out.push(Violation::new(
                    "disturbance",
                    "vibration needs a positive frequency and finite amplitudes",
                ));
            }
            if !(v.ramp >= 0.0) {
                out.push(Violation::new(
                    "disturbance.vibration_ramp_s",
                    "must be non-negative",
                ));
            }
        }
        out
    }
}

/// Time derivative of [`VehicleState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub attitude_rate: Quaternion,
    pub angular_acceleration: Vec3,
}

/// `-b_yaw * omega3` about `b3`.
pub fn passive_yaw_damping(c: &InertialConfig, omega3: f64) -> f64 {
    -c.yaw_damping * omega3
}

pub fn derivatives(s: &VehicleState, u: &Wrench, c: &InertialConfig) -> StateDerivative {
    let w = s.angular_velocity;
    let acceleration =
        Vec3::new(0.0, 0.0, -c.gravity) + s.attitude.rotate(Vec3::Z) * (u.thrust / c.mass);
    let mut torque = u.torque + Vec3::new(0.0, 0.0, passive_yaw_damping(c, w.z));
    if let Some(v) = &c.vibration {
        torque += v.torque(s.time);
    }
    let gyro = w.cross(c.inertia.mul_vec(w));
    StateDerivative {
        velocity: s.velocity,
        acceleration,
        attitude_rate: s.attitude.mul(Quaternion::pure(w)).scale(0.5),
        angular_acceleration: c.inertia_inv.mul_vec(torque - gyro),
    }
}

fn advance(s: &VehicleState, d: &StateDerivative, h: f64) -> VehicleState {
    VehicleState {
        position: s.position + d.velocity * h,
        velocity: s.velocity + d.acceleration * h,
        attitude: s.attitude.add(d.attitude_rate.scale(h)),
        angular_velocity: s.angular_velocity + d.angular_acceleration * h,
        time: s.time + h,
    }
}

/// One classical RK4 step with the wrench held constant; the attitude is
/// renormalized afterwards.
pub fn step(
    s: &VehicleState,
    u: &Wrench,
    c: &InertialConfig,
    dt: f64,
) -> Result<VehicleState, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    if !s.is_finite() {
        return Err(DynamicsError::NonFinite("state"));
    }
    if !(u.thrust.is_finite() && u.torque.is_finite()) {
        return Err(DynamicsError::NonFinite("wrench"));
    }

    let k1 = derivatives(s, u, c);
    let k2 = derivatives(&advance(s, &k1, 0.5 * dt), u, c);
    let k3 = derivatives(&advance(s, &k2, 0.5 * dt), u, c);
    let k4 = derivatives(&advance(s, &k3, dt), u, c);

    let h6 = dt / 6.0;
    let comb3 = |a: Vec3, b: Vec3, cc: Vec3, d: Vec3| (a + (b + cc) * 2.0 + d) * h6;
    let dq = k1
        .attitude_rate
        .add(k2.attitude_rate.add(k3.attitude_rate).scale(2.0))
        .add(k4.attitude_rate)
        .scale(h6);

    Ok(VehicleState {
        position: s.position + comb3(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
        velocity: s.velocity
            + comb3(
                k1.acceleration,
                k2.acceleration,
                k3.acceleration,
                k4.acceleration,
            ),
        attitude: s.attitude.add(dq).normalized(),
        angular_velocity: s.angular_velocity
            + comb3(
                k1.angular_acceleration,
                k2.angular_acceleration,
                k3.angular_acceleration,
                k4.angular_acceleration,
            ),
        time: s.time + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_fall_acceleration() {
        let c = InertialConfig::four_wing();
        let d = derivatives(&VehicleState::default(), &Wrench::default(), &c);
        assert_eq!(d.acceleration, Vec3::new(0.0, 0.0, -9.81));
    }

    #[test]
    fn hover_balance() {
        let c = InertialConfig::four_wing();
        let d = derivatives(
            &VehicleState::default(),
            &Wrench::new(c.weight(), Vec3::ZERO),
            &c,
        );
        assert!(d.acceleration.norm() < 1e-15);
    }

    #[test]
    fn single_axis_spin_has_no_gyroscopic_term() {
        let c = InertialConfig::four_wing();
        let s = VehicleState {
            angular_velocity: Vec3::new(7.0, 0.0, 0.0),
            ..Default::default()
        };
        let d = derivatives(&s, &Wrench::default(), &c);
        assert_eq!(d.angular_acceleration, Vec3::ZERO);
    }

    #[test]
    fn ballistic_drop_matches_closed_form() {
        let c = InertialConfig::four_wing();
        let mut s = VehicleState::at_rest(Vec3::new(0.0, 0.0, 1.0));
        for _ in 0..200 {
            s = step(&s, &Wrench::default(), &c, DEFAULT_DT).unwrap();
        }
        assert!((s.time - 0.1).abs() < 1e-12);
        assert!((s.position.z - (1.0 - 0.04905)).abs() < 1e-9);
    }

    #[test]
    fn yaw_damping_opposes_rate() {
        let c = InertialConfig::four_wing().with_yaw_damping(2e-9);
        assert_eq!(passive_yaw_damping(&c, 0.0), 0.0);
        assert!(passive_yaw_damping(&c, 3.0) < 0.0);
        assert!(passive_yaw_damping(&c, -3.0) > 0.0);
    }

    #[test]
    fn free_yaw_decay_is_exponential() {
        let b = 9e-9;
        let c = InertialConfig::four_wing().with_yaw_damping(b);
        let j33 = c.inertia().m[2][2];
        let mut s = VehicleState {
            angular_velocity: Vec3::new(0.0, 0.0, 5.0),
            ..Default::default()
        };
        let u = Wrench::new(c.weight(), Vec3::ZERO);
        let mut prev = s.angular_velocity.z.abs();
        for _ in 0..400 {
            s = step(&s, &u, &c, DEFAULT_DT).unwrap();
            let now = s.angular_velocity.z.abs();
            assert!(now <= prev);
            prev = now;
        }
        let expect = 5.0 * (-b * s.time / j33).exp();
        assert!((s.angular_velocity.z / expect - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = InertialConfig::four_wing();
        let s = VehicleState::default();
        assert_eq!(
            step(&s, &Wrench::default(), &c, 0.0),
            Err(DynamicsError::InvalidStep(0.0))
        );
        assert_eq!(
            step(&s, &Wrench::new(f64::NAN, Vec3::ZERO), &c, 1e-3),
            Err(DynamicsError::NonFinite("wrench"))
        );
        let bad = VehicleState {
            position: Vec3::new(f64::INFINITY, 0.0, 0.0),
            ..s
        };
        assert_eq!(
            step(&bad, &Wrench::default(), &c, 1e-3),
            Err(DynamicsError::NonFinite("state"))
        );
    }

    #[test]
    fn vibration_amplitude_formula() {
        let a = Vibration::amplitude_for_angle(0.1, 1.5e-9, 100.0);
        assert!((a - 0.1 * 1.5e-9 * (TAU * 100.0).powi(2)).abs() < 1e-20);
    }
}
