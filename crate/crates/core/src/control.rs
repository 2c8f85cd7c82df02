//! Quaternion attitude law, PID position and altitude loops, desired-frame
//! construction and the per-tick controller that feeds allocation.

use thiserror::Error;

use crate::aero::{AeroError, Allocation, MixingMatrix, Violation, WingConfig, Wrench};
use crate::dynamics::VehicleState;
use crate::spatial::{quat_error, sgn, Quaternion, RotationMatrix, Vec3};

/// Threshold below which thrust vectors and yaw cross products are treated
/// as degenerate, N.
pub const DEGENERACY_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("desired thrust magnitude {0:.3e} N is below the degeneracy threshold")]
    DegenerateThrust(f64),
    #[error("desired thrust is parallel to the yaw reference axis")]
    DegenerateYaw,
    #[error(transparent)]
    Mixing(#[from] AeroError),
}

/// Diagonal gains of the attitude law, stored as the diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeGains {
    /// Proportional gain on the error vector part, N m.
    pub k1: Vec3,
    /// Rate gain, N m s/rad.
    pub k2: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeGains {
    pub kp: f64,
    pub kd: f64,
    pub ki: f64,
    /// Bound on the altitude error integral, m s.
    pub integral_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGains {
    pub kp: Vec3,
    pub kd: Vec3,
    pub ki: Vec3,
    /// Bound on each component of the position error integral, m s.
    pub integral_limit: Vec3,
    pub altitude: AltitudeGains,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        Self {
            k1: Vec3::new(2.7e-6, 2.7e-6, 1.0e-6),
            k2: Vec3::new(6.3e-8, 6.3e-8, 2.0e-8),
        }
    }
}

impl Default for PositionGains {
    fn default() -> Self {
        Self {
            kp: Vec3::new(1.5e-3, 1.5e-3, 2.4e-3),
            kd: Vec3::new(8.0e-4, 8.0e-4, 1.0e-3),
            ki: Vec3::new(3.0e-4, 3.0e-4, 6.0e-4),
            integral_limit: Vec3::splat(0.5),
            altitude: AltitudeGains {
                kp: 3.0e-3,
                kd: 1.0e-3,
                ki: 1.0e-3,
                integral_limit: 0.5,
            },
        }
    }
}

impl AttitudeGains {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        positive_diag(&mut out, "control.attitude_k1", self.k1);
        positive_diag(&mut out, "control.attitude_k2", self.k2);
        out
    }
}

impl PositionGains {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        positive_diag(&mut out, "control.position_kp", self.kp);
        positive_diag(&mut out, "control.position_kd", self.kd);
        positive_diag(&mut out, "control.position_ki", self.ki);
        positive_diag(
            &mut out,
            "control.position_integral_limit_m_s",
            self.integral_limit,
        );
        let a = &self.altitude;
        for (v, name) in [(a.kp, "control.altitude_kp"), (a.kd, "control.altitude_kd")] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(name, "gain must be positive"));
            }
        }
        // k_i = 0 is a legitimate proportional-derivative altitude loop
        for (v, name) in [
            (a.ki, "control.altitude_ki"),
            (a.integral_limit, "control.altitude_integral_limit_m_s"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Violation::new(name, "must be non-negative"));
            }
        }
        out
    }
}

fn positive_diag(out: &mut Vec<Violation>, name: &str, d: Vec3) {
    if !(d.x > 0.0 && d.y > 0.0 && d.z > 0.0 && d.is_finite()) {
        out.push(Violation::new(
            name,
            "diagonal entries must be positive (positive-definite gain)",
        ));
    }
}

/// Reference for the position and altitude loops.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    /// Desired yaw, rad. `None` tracks the measured yaw.
    pub yaw: Option<f64>,
    /// Desired angular velocity expressed in the desired frame, rad/s.
    pub angular_velocity: Vec3,
}

impl Setpoint {
    pub fn hold(position: Vec3) -> Self {
        Self {
            position,
            ..Self::default()
        }
    }
}

/// Trapezoidal integrator with per-component clamping and conditional
/// integration while the actuators are saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    value: Vec3,
    prev_error: Option<Vec3>,
    limit: Vec3,
}

impl Integrator {
    pub fn new(limit: Vec3) -> Self {
        Self {
            value: Vec3::ZERO,
            prev_error: None,
            limit,
        }
    }

    pub fn value(&self) -> Vec3 {
        self.value
    }

    pub fn limit(&self) -> Vec3 {
        self.limit
    }

    pub fn reset(&mut self) {
        self.value = Vec3::ZERO;
        self.prev_error = None;
    }

    /// Advances by `dt` with the trapezoid rule. When `hold_growth` is set,
    /// components whose magnitude would increase are left unchanged.
    pub fn update(&mut self, error: Vec3, dt: f64, hold_growth: bool) -> Vec3 {
        let prev = self.prev_error.unwrap_or(error);
        let delta = (prev + error) * (0.5 * dt);
        let mut v = [self.value.x, self.value.y, self.value.z];
        let d = delta.to_array();
        let lim = self.limit.to_array();
        for i in 0..3 {
            let next = v[i] + d[i];
            if hold_growth && next.abs() > v[i].abs() {
                continue;
            }
            v[i] = next.clamp(-lim[i], lim[i]);
        }
        self.value = Vec3::from_array(v);
        self.prev_error = Some(error);
        self.value
    }
}

/// Attitude law `tau = -K1 sgn(m_e) n_e - K2 (omega - omega_d)` with
/// `q_e = q_d^-1 * q`.
pub fn attitude_torque(
    q: Quaternion,
    q_d: Quaternion,
    omega: Vec3,
    omega_d: Vec3,
    g: &AttitudeGains,
) -> Vec3 {
    let e = quat_error(q_d, q);
    -(g.k1.hadamard(e.v) * sgn(e.w)) - g.k2.hadamard(omega - omega_d)
}

/// Expresses a desired-frame angular velocity in the body frame.
pub fn desired_rate_in_body(q: Quaternion, q_d: Quaternion, omega_hat_d: Vec3) -> Vec3 {
    quat_error(q_d, q).rotate_inverse(omega_hat_d)
}

/// PID thrust vector in the inertial frame. Advances `integral` by one
/// step of `dt`.
#[allow(clippy::too_many_arguments)]
pub fn position_force(
    s: &VehicleState,
    sp: &Setpoint,
    g: &PositionGains,
    integral: &mut Integrator,
    mass: f64,
    gravity: f64,
    dt: f64,
    hold_growth: bool,
) -> Vec3 {
    let e = s.position - sp.position;
    let i = integral.update(e, dt, hold_growth);
    -g.kp.hadamard(e) - g.kd.hadamard(s.velocity - sp.velocity) - g.ki.hadamard(i)
        + Vec3::new(0.0, 0.0, mass * gravity)
        + sp.acceleration * mass
}

/// Projection of the desired force onto the current `b3`, floored at zero.
pub fn thrust_magnitude(f_d: Vec3, q: Quaternion) -> f64 {
    f_d.dot(q.rotate(Vec3::Z)).max(0.0)
}

/// Attitude whose `b3` points along `f_d`, with heading fixed by `yaw`.
pub fn desired_attitude(f_d: Vec3, yaw: f64) -> Result<Quaternion, ControlError> {
    let n = f_d.norm();
    if !(n > DEGENERACY_EPS) {
        return Err(ControlError::DegenerateThrust(n));
    }
    let i3 = f_d / n;
    let i_psi = Vec3::new(-yaw.sin(), yaw.cos(), 0.0);
    let c = i_psi.cross(i3);
    let cn = c.norm();
    if !(cn > DEGENERACY_EPS) {
        return Err(ControlError::DegenerateYaw);
    }
    let i1 = c / cn;
    let i2 = i3.cross(i1);
    let s = RotationMatrix::from_cols(i1, i2, i3)
        .expect("axes built from cross products are orthonormal");
    Ok(s.to_quat())
}

/// Altitude PID assuming `b3` is close to vertical. Advances `integral`
/// (only its z component is used).
#[allow(clippy::too_many_arguments)]
pub fn altitude_thrust(
    r3: f64,
    v3: f64,
    r3_d: f64,
    g: &AltitudeGains,
    integral: &mut Integrator,
    mass: f64,
    gravity: f64,
    dt: f64,
    hold_growth: bool,
) -> f64 {
    let e = r3 - r3_d;
    let i = integral.update(Vec3::new(0.0, 0.0, e), dt, hold_growth).z;
    -g.kp * e - g.kd * v3 - g.ki * i + mass * gravity
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Altitude PID with level attitude at the measured yaw.
    AltitudeAttitude,
    /// Full position PID through the desired-frame construction.
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub mode: ControlMode,
    pub attitude: AttitudeGains,
    pub position: PositionGains,
    /// When false the commanded yaw torque is zero.
    pub yaw_feedback: bool,
    /// Upper bound on commanded thrust, N.
    pub thrust_limit: Option<f64>,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            mode: ControlMode::Position,
            attitude: AttitudeGains::default(),
            position: PositionGains::default(),
            yaw_feedback: false,
            thrust_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TickOutput {
    /// Wrench requested from the allocator.
    pub wrench: Wrench,
    pub allocation: Allocation,
    pub desired_attitude: Quaternion,
}

/// Controller state machine advanced once per control tick.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControlConfig,
    mixer: MixingMatrix,
    mass: f64,
    gravity: f64,
    dt: f64,
    position_integral: Integrator,
    altitude_integral: Integrator,
    last: TickOutput,
    last_valid_target: Quaternion,
}

impl Controller {
    pub fn new(
        config: ControlConfig,
        wing: &WingConfig,
        mass: f64,
        gravity: f64,
        dt: f64,
    ) -> Result<Self, ControlError> {
        let mixer = MixingMatrix::new(wing)?;
        Ok(Self {
            position_integral: Integrator::new(config.position.integral_limit),
            altitude_integral: Integrator::new(Vec3::splat(
                config.position.altitude.integral_limit,
            )),
            config,
            mixer,
            mass,
            gravity,
            dt,
            last: TickOutput::default(),
            last_valid_target: Quaternion::IDENTITY,
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.config
    }

    pub fn mixer(&self) -> &MixingMatrix {
        &self.mixer
    }

    /// Output of the most recent successful tick.
    pub fn last_output(&self) -> TickOutput {
        self.last
    }

    pub fn position_integral(&self) -> &Integrator {
        &self.position_integral
    }

    pub fn altitude_integral(&self) -> &Integrator {
        &self.altitude_integral
    }

    /// Runs one control step on the estimated state. On error the previous
    /// command stays in effect and is available from [`last_output`].
    ///
    /// [`last_output`]: Controller::last_output
    pub fn tick(&mut self, est: &VehicleState, sp: &Setpoint) -> Result<TickOutput, ControlError> {
        let saturated = self.last.allocation.any_saturated();
        let q = est.attitude;
        let (_, _, measured_yaw) = q.to_euler_zyx();

        let (thrust, q_d) = match self.config.mode {
            ControlMode::AltitudeAttitude => {
                let f = altitude_thrust(
                    est.position.z,
                    est.velocity.z,
                    sp.position.z,
                    &self.config.position.altitude,
                    &mut self.altitude_integral,
                    self.mass,
                    self.gravity,
                    self.dt,
                    saturated,
                );
                (f.max(0.0), Quaternion::yaw(measured_yaw))
            }
            ControlMode::Position => {
                let f_d = position_force(
                    est,
                    sp,
                    &self.config.position,
                    &mut self.position_integral,
                    self.mass,
                    self.gravity,
                    self.dt,
                    saturated,
                );
                let q_d = desired_attitude(f_d, sp.yaw.unwrap_or(measured_yaw))?;
                (thrust_magnitude(f_d, q), q_d)
            }
        };
        let thrust = match self.config.thrust_limit {
            Some(limit) => thrust.min(limit),
            None => thrust,
        };

        let omega_d = desired_rate_in_body(q, q_d, sp.angular_velocity);
        let mut torque =
            attitude_torque(q, q_d, est.angular_velocity, omega_d, &self.config.attitude);
        if !self.config.yaw_feedback {
            torque.z = 0.0;
        }
        let wrench = Wrench::new(thrust, torque);
        let out = TickOutput {
            wrench,
            allocation: self.mixer.allocate(&wrench),
            desired_attitude: q_d,
        };
        self.last = out;
        self.last_valid_target = q_d;
        Ok(out)
    }

    pub fn last_valid_target(&self) -> Quaternion {
        self.last_valid_target
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    const M: f64 = 9.5e-5;
    const G: f64 = 9.81;

    #[test]
    fn attitude_equilibrium_is_torque_free() {
        let q = Quaternion::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.7);
        let w = Vec3::new(0.3, -0.2, 0.1);
        let t = attitude_torque(q, q, w, w, &AttitudeGains::default());
        assert!(t.norm() < 1e-20);
    }

    #[test]
    fn torque_is_half_angle_sine_about_error_axis() {
        let g = AttitudeGains {
            k1: Vec3::new(2.0, 3.0, 5.0),
            k2: Vec3::splat(1.0),
        };
        let q_d = Quaternion::from_axis_angle(Vec3::new(0.2, -1.0, 0.4), 1.1);
        let axis = Vec3::new(1.0, 2.0, -2.0) / 3.0;
        for theta in [0.1, 1.0, 2.5, 3.1] {
            let q = q_d.mul(Quaternion::from_axis_angle(axis, theta));
            let t = attitude_torque(q, q_d, Vec3::ZERO, Vec3::ZERO, &g);
            let expect = -g.k1.hadamard(axis) * (theta / 2.0).sin();
            assert!((t - expect).norm() < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn sign_of_error_quaternion_does_not_matter() {
        let g = AttitudeGains::default();
        let q = Quaternion::from_axis_angle(Vec3::X, 0.4);
        let q_d = Quaternion::from_axis_angle(Vec3::Y, -0.3);
        let a = attitude_torque(q, q_d, Vec3::ZERO, Vec3::ZERO, &g);
        let b = attitude_torque(-q, q_d, Vec3::ZERO, Vec3::ZERO, &g);
        assert!((a - b).norm() < 1e-20);
    }

    #[test]
    fn hover_feedforward() {
        let mut i = Integrator::new(Vec3::splat(1.0));
        let sp = Setpoint::hold(Vec3::new(0.1, 0.2, 0.3));
        let s = VehicleState::at_rest(sp.position);
        let f = position_force(
            &s,
            &sp,
            &PositionGains::default(),
            &mut i,
            M,
            G,
            5e-4,
            false,
        );
        assert_eq!(f, Vec3::new(0.0, 0.0, M * G));
        assert!((f.z - 9.3195e-4).abs() < 1e-15);
    }

    #[test]
    fn position_error_is_restoring() {
        let mut i = Integrator::new(Vec3::splat(1.0));
        let sp = Setpoint::default();
        let s = VehicleState::at_rest(Vec3::new(0.05, 0.0, 0.0));
        let f = position_force(
            &s,
            &sp,
            &PositionGains::default(),
            &mut i,
            M,
            G,
            5e-4,
            false,
        );
        assert!(f.x < 0.0);
    }

    #[test]
    fn thrust_projection() {
        let f = Vec3::new(0.0, 0.0, M * G);
        assert_eq!(thrust_magnitude(f, Quaternion::IDENTITY), M * G);
        let tilted = Quaternion::from_axis_angle(Vec3::X, FRAC_PI_3);
        assert!((thrust_magnitude(f, tilted) - M * G / 2.0).abs() < 1e-15);
        assert_eq!(
            thrust_magnitude(Vec3::new(1.0, 0.0, 0.0), Quaternion::IDENTITY),
            0.0
        );
    }

    #[test]
    fn level_hover_target_is_identity() {
        let q = desired_attitude(Vec3::new(0.0, 0.0, M * G), 0.0).unwrap();
        assert!((q.w - 1.0).abs() < 1e-15 && q.v.norm() < 1e-15);
    }

    #[test]
    fn desired_attitude_aligns_thrust_axis() {
        let th = 10f64.to_radians();
        let f = Vec3::new(th.sin(), 0.0, th.cos()) * 1e-3;
        let q = desired_attitude(f, 0.0).unwrap();
        let b3 = q.rotate(Vec3::Z);
        assert!((b3 - f / f.norm()).norm() < 1e-9);
        let r = q.to_rotmat();
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_targets() {
        assert!(matches!(
            desired_attitude(Vec3::new(0.0, 0.0, 1e-7), 0.0),
            Err(ControlError::DegenerateThrust(_))
        ));
        assert_eq!(
            desired_attitude(Vec3::new(0.0, 1e-3, 0.0), 0.0),
            Err(ControlError::DegenerateYaw)
        );
    }

    #[test]
    fn altitude_law_signs() {
        let g = PositionGains::default().altitude;
        let mut i = Integrator::new(Vec3::splat(1.0));
        let f = altitude_thrust(0.3, 0.0, 0.3, &g, &mut i, M, G, 5e-4, false);
        assert_eq!(f, M * G);
        let f = altitude_thrust(0.1, 0.0, 0.3, &g, &mut i, M, G, 5e-4, false);
        assert!(f > M * G);
    }

    #[test]
    fn integrator_clamps_and_holds() {
        let mut i = Integrator::new(Vec3::splat(0.01));
        for _ in 0..1000 {
            i.update(Vec3::new(1.0, -1.0, 0.5), 1e-3, false);
        }
        assert_eq!(i.value(), Vec3::new(0.01, -0.01, 0.01));
        let mut j = Integrator::new(Vec3::splat(1.0));
        j.update(Vec3::new(1.0, 0.0, 0.0), 1e-3, false);
        j.update(Vec3::new(1.0, 0.0, 0.0), 1e-3, false);
        let before = j.value();
        j.update(Vec3::new(1.0, 0.0, 0.0), 1e-3, true);
        assert_eq!(j.value(), before);
        j.update(Vec3::new(-5.0, 0.0, 0.0), 1e-3, true);
        assert!(j.value().x < before.x);
    }

    #[test]
    fn perfect_hover_commands_equal_wings() {
        let w = WingConfig::four_wing();
        let mut c = Controller::new(ControlConfig::default(), &w, M, G, 5e-4).unwrap();
        let sp = Setpoint::hold(Vec3::new(0.0, 0.0, 0.2));
        let out = c.tick(&VehicleState::at_rest(sp.position), &sp).unwrap();
        assert!((out.wrench.thrust - M * G).abs() < 1e-18);
        let v = out.allocation.command.0;
        let expect = c
            .mixer()
            .allocate(&Wrench::new(M * G, Vec3::ZERO))
            .command
            .0;
        for j in 0..4 {
            assert!((v[j] - expect[j]).abs() < 1e-9);
            assert!((v[j] - v[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn altitude_mode_targets_level_attitude_at_measured_yaw() {
        let w = WingConfig::four_wing();
        let cfg = ControlConfig {
            mode: ControlMode::AltitudeAttitude,
            ..Default::default()
        };
        let mut c = Controller::new(cfg, &w, M, G, 5e-4).unwrap();
        let s = VehicleState {
            attitude: Quaternion::from_euler_zyx(0.05, -0.02, 1.2),
            ..Default::default()
        };
        let out = c
            .tick(&s, &Setpoint::hold(Vec3::new(0.0, 0.0, 0.3)))
            .unwrap();
        let (r, p, y) = out.desired_attitude.to_euler_zyx();
        assert!(r.abs() < 1e-12 && p.abs() < 1e-12);
        assert!((y - 1.2).abs() < 1e-9);
        assert_eq!(out.wrench.torque.z, 0.0);
    }

    #[test]
    fn degenerate_tick_holds_previous_command() {
        let w = WingConfig::four_wing();
        let mut c = Controller::new(ControlConfig::default(), &w, M, G, 5e-4).unwrap();
        let sp = Setpoint::hold(Vec3::ZERO);
        let first = c.tick(&VehicleState::default(), &sp).unwrap();
        // free-fall feedforward cancels gravity exactly
        let sp2 = Setpoint {
            acceleration: Vec3::new(0.0, 0.0, -G),
            ..sp
        };
        assert!(matches!(
            c.tick(&VehicleState::default(), &sp2),
            Err(ControlError::DegenerateThrust(_))
        ));
        assert_eq!(c.last_output(), first);
    }
}
