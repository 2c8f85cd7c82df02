//! Cycle-averaged aerodynamic force models and control allocation.
//!
//! All force models use constant lumped coefficients: the angle-of-attack
//! dependence, air density and reference radius are folded into `c1..c3`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::spatial::Vec3;

/// Number of independently driven wings handled by the mixing matrix.
pub const MIXED_WINGS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AeroError {
    #[error("mixing matrix is singular: {0} must be non-zero")]
    SingularMixing(&'static str),
    #[error("mixing requires {MIXED_WINGS} wings, configuration has {0}")]
    WingCount(u32),
}

/// A violated parameter invariant, reported by the various `validate` methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Per-wing geometry and lumped aerodynamic coefficients, all in SI units.
///
/// `count` wings share the same parameters. Lever arms `d[0..3]` are the
/// equivalent roll, pitch and yaw arms of the mixing matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingConfig {
    pub count: u32,
    /// Area of one wing, m^2.
    pub area: f64,
    /// End-to-end flapping amplitude, rad.
    pub flap_amplitude: f64,
    pub flap_frequency: f64,
    /// Stroke-plane inclination relative to the steering plane, rad.
    pub stroke_plane_inclination: f64,
    pub lever_arms: [f64; 3],
    /// Distance from the wing pressure centre to the yaw axis, m.
    pub steering_arm: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Thrust per command unit, N/V.
    pub k_f: f64,
    /// Steering-plane force per command unit, N/V.
    pub k_s: f64,
    /// Drive amplitude limit, V.
    pub v_max: f64,
}

impl WingConfig {
    /// Four-wing defaults: 100 Hz, 65 deg amplitude, 200 mm^2 total area,
    /// `c1` calibrated to 1.4 mN total lift and `k_f` so that a 200 V
    /// command produces the per-wing share of it.
    pub fn four_wing() -> Self {
        let mut w = WingConfig {
            count: 4,
            area: 50e-6,
            flap_amplitude: 65f64.to_radians(),
            flap_frequency: 100.0,
            stroke_plane_inclination: 20f64.to_radians(),
            lever_arms: [5e-3, 5e-3, 8e-3],
            steering_arm: 8e-3,
            c1: 0.0,
            c2: 5e-5,
            c3: 0.0,
            k_f: 0.0,
            k_s: 0.0,
            v_max: 260.0,
        };
        w.calibrate_lift(1.4e-3);
        w.calibrate_force_coefficients(200.0);
        w
    }

    /// Two-wing variant with half the total wing area of [`four_wing`] and
    /// the flapping frequency raised by sqrt(2) so total lift is unchanged.
    ///
    /// [`four_wing`]: WingConfig::four_wing
    pub fn two_wing_matched() -> Self {
        let base = Self::four_wing();
        WingConfig {
            count: 2,
            flap_frequency: base.flap_frequency * std::f64::consts::SQRT_2,
            ..base
        }
    }

    pub fn total_area(&self) -> f64 {
        self.area * self.count as f64
    }

    /// Sets `c1` so that the summed lift of all wings equals `total_lift`.
    pub fn calibrate_lift(&mut self, total_lift: f64) {
        let nu = self.flap_frequency;
        let phi = self.flap_amplitude;
        self.c1 = total_lift / (self.count as f64 * nu * nu * phi * phi * self.area);
    }

    /// Sets `k_f` so that `nominal_command` reproduces the per-wing lift,
    /// and `k_s = k_f sin(beta)`.
    pub fn calibrate_force_coefficients(&mut self, nominal_command: f64) {
        self.k_f = cycle_avg_lift(self) / nominal_command;
        self.k_s = self.k_f * self.stroke_plane_inclination.sin();
    }

    pub fn c4(&self) -> f64 {
        self.c1 * self.area * self.stroke_plane_inclination.sin()
    }

    pub fn c5(&self) -> f64 {
        self.steering_arm * self.c4()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                out.push(Violation::new(field, msg));
            }
        };
        check(self.count > 0, "wing.count", "must be at least 1");
        check(
            self.area > 0.0,
            "wing.area_mm2",
            "wing area must be positive",
        );
        check(
            self.flap_amplitude > 0.0 && self.flap_amplitude <= FRAC_PI_2 + 1e-12,
            "wing.flap_amplitude_deg",
            "each wing flaps within its own quadrant, so the amplitude must be in (0, 90] deg",
        );
        check(
            self.flap_frequency > 0.0,
            "wing.flap_frequency_hz",
            "must be positive",
        );
        check(
            (0.0..FRAC_PI_2).contains(&self.stroke_plane_inclination),
            "wing.stroke_plane_inclination_deg",
            "must be in [0, 90) deg",
        );
        for (i, d) in self.lever_arms.iter().enumerate() {
            let names = [
                "wing.lever_arm_roll_mm",
                "wing.lever_arm_pitch_mm",
                "wing.lever_arm_yaw_mm",
            ];
            check(*d > 0.0, names[i], "lever arm must be positive");
        }
        check(
            self.steering_arm > 0.0,
            "wing.steering_arm_mm",
            "must be positive",
        );
        check(
            self.k_f > 0.0,
            "wing.k_f_n_per_v",
            "thrust coefficient must be positive",
        );
        check(
            self.k_s >= 0.0,
            "wing.k_s_n_per_v",
            "steering coefficient must be non-negative",
        );
        check(
            self.v_max > 0.0,
            "wing.v_max_v",
            "drive limit must be positive",
        );
        let coeffs = [self.c1, self.c2, self.c3, self.k_f, self.k_s, self.v_max];
        check(
            coeffs.iter().all(|c| c.is_finite()),
            "wing",
            "coefficients must be finite",
        );
        out
    }
}

impl Default for WingConfig {
    fn default() -> Self {
        Self::four_wing()
    }
}

/// Total thrust along `b3` and body torque.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub thrust: f64,
    pub torque: Vec3,
}

impl Wrench {
    pub fn new(thrust: f64, torque: Vec3) -> Self {
        Self { thrust, torque }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.thrust, self.torque.x, self.torque.y, self.torque.z]
    }

    pub fn from_array(u: [f64; 4]) -> Self {
        Self::new(u[0], Vec3::new(u[1], u[2], u[3]))
    }
}

/// Per-wing sinusoid amplitudes, in drive volts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorCommand(pub [f64; MIXED_WINGS]);

impl ActuatorCommand {
    pub fn uniform(v: f64) -> Self {
        Self([v; MIXED_WINGS])
    }
}

/// Result of [`MixingMatrix::allocate`]: clamped command plus which wings
/// hit a limit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Allocation {
    pub command: ActuatorCommand,
    pub saturated: [bool; MIXED_WINGS],
}

impl Allocation {
    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }
}

/// Cycle-averaged lift of one wing, `c1 nu^2 phi0^2 S`.
pub fn cycle_avg_lift(w: &WingConfig) -> f64 {
    let nu = w.flap_frequency;
    let phi = w.flap_amplitude;
    w.c1 * nu * nu * phi * phi * w.area
}

pub fn total_lift(w: &WingConfig) -> f64 {
    cycle_avg_lift(w) * w.count as f64
}

/// Cycle-averaged damping force of one wing for body rate `omega_b` and
/// body angular acceleration `omega_b_dot`.
pub fn cycle_avg_damping(w: &WingConfig, omega_b: f64, omega_b_dot: f64) -> f64 {
    w.c2 * w.flap_amplitude * w.flap_frequency * omega_b * w.area + w.c3 * omega_b_dot * w.area
}

/// Steering-plane force and yaw torque of one wing under the inclined
/// stroke plane.
pub fn steering_force_torque(w: &WingConfig) -> (f64, f64) {
    let nu = w.flap_frequency;
    let phi = w.flap_amplitude;
    let k = nu * nu * phi * phi;
    (w.c4() * k, w.c5() * k)
}

/// Linear yaw-damping constant of the whole vehicle, N m s/rad: the
/// rate-proportional damping force summed over all wings, times the
/// steering arm.
pub fn yaw_damping_coefficient(w: &WingConfig) -> f64 {
    w.count as f64 * w.steering_arm * cycle_avg_damping(w, 1.0, 0.0)
}

/// Sign pattern of the mixing matrix. Rows are thrust, roll, pitch, yaw;
/// columns are wings 1..4 (1, 2 on the right; 2, 4 at the front).
pub const MIXING_SIGNS: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, 1.0],
    [-1.0, -1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// Linear map from per-wing commands to `[f, tau1, tau2, tau3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingMatrix {
    gamma: [[f64; 4]; 4],
    row_gain: [f64; 4],
    v_max: f64,
}

impl MixingMatrix {
    pub fn new(w: &WingConfig) -> Result<Self, AeroError> {
        if w.count as usize != MIXED_WINGS {
            return Err(AeroError::WingCount(w.count));
        }
        let [d1, d2, d3] = w.lever_arms;
        let row_gain = [w.k_f, w.k_f * d1, w.k_f * d2, w.k_s * d3];
        let names = ["k_f", "k_f d1", "k_f d2", "k_s d3"];
        for (g, name) in row_gain.iter().zip(names) {
            if *g == 0.0 || !g.is_finite() {
                return Err(AeroError::SingularMixing(name));
            }
        }
        let mut gamma = [[0.0; 4]; 4];
        for (i, row) in gamma.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = MIXING_SIGNS[i][j] * row_gain[i];
            }
        }
        Ok(Self {
            gamma,
            row_gain,
            v_max: w.v_max,
        })
    }

    pub fn gamma(&self) -> &[[f64; 4]; 4] {
        &self.gamma
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// `u = Gamma v`.
    pub fn mix(&self, v: &ActuatorCommand) -> Wrench {
        let mut u = [0.0; 4];
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = (0..4).map(|j| self.gamma[i][j] * v.0[j]).sum();
        }
        Wrench::from_array(u)
    }

    /// Closed-form inverse. The sign rows are mutually orthogonal with
    /// squared norm 4, so `Gamma^-1 = H^T diag(1 / (4 g_i))`.
    pub fn inverse(&self) -> [[f64; 4]; 4] {
        let mut inv = [[0.0; 4]; 4];
        for (j, row) in inv.iter_mut().enumerate() {
            for (i, cell) in row.iter_mut().enumerate() {
                *cell = MIXING_SIGNS[i][j] / (4.0 * self.row_gain[i]);
            }
        }
        inv
    }

    /// `v = Gamma^-1 u` without limits.
    pub fn unclamped(&self, u: &Wrench) -> [f64; 4] {
        let inv = self.inverse();
        let u = u.to_array();
        let mut v = [0.0; 4];
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = (0..4).map(|i| inv[j][i] * u[i]).sum();
        }
        v
    }

    /// `v = Gamma^-1 u`, each component clamped to `[0, v_max]`.
    pub fn allocate(&self, u: &Wrench) -> Allocation {
        let raw = self.unclamped(u);
        let mut out = Allocation::default();
        for j in 0..MIXED_WINGS {
            let v = raw[j];
            out.saturated[j] = !(0.0..=self.v_max).contains(&v);
            out.command.0[j] = if v.is_nan() {
                0.0
            } else {
                v.clamp(0.0, self.v_max)
            };
        }
        out
    }
}

pub fn mixing_matrix(w: &WingConfig) -> Result<MixingMatrix, AeroError> {
    MixingMatrix::new(w)
}

pub fn allocate(w: &WingConfig, u: &Wrench) -> Result<Allocation, AeroError> {
    Ok(MixingMatrix::new(w)?.allocate(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn calibrated_total_lift() {
        let w = WingConfig::four_wing();
        assert!((total_lift(&w) - 1.4e-3).abs() < 1e-15);
        assert!((cycle_avg_lift(&w) - 0.35e-3).abs() < 1e-15);
        assert!((w.k_f - 1.75e-6).abs() < 1e-18);
    }

    #[test]
    fn lift_scales_quadratically_in_amplitude() {
        let mut w = WingConfig::four_wing();
        w.flap_amplitude = 0.4;
        let a = cycle_avg_lift(&w);
        w.flap_amplitude = 0.8;
        assert!((cycle_avg_lift(&w) / a - 4.0).abs() < 1e-12);
        w.flap_amplitude = 0.0;
        assert_eq!(cycle_avg_lift(&w), 0.0);
    }

    #[test]
    fn damping_is_zero_at_rest_and_linear_in_rate() {
        let w = WingConfig::four_wing();
        assert_eq!(cycle_avg_damping(&w, 0.0, 0.0), 0.0);
        let a = cycle_avg_damping(&w, 1.3, 0.0);
        assert!((cycle_avg_damping(&w, 2.6, 0.0) - 2.0 * a).abs() < 1e-20);
    }

    #[test]
    fn steering_projection() {
        let mut w = WingConfig::four_wing();
        let (f, t) = steering_force_torque(&w);
        assert!((t / f - w.steering_arm).abs() < 1e-15);
        let expect = cycle_avg_lift(&w) * w.stroke_plane_inclination.sin();
        assert!((f - expect).abs() <= 1e-15 * expect);
        w.stroke_plane_inclination = 0.0;
        assert_eq!(steering_force_torque(&w).0, 0.0);
    }

    #[test]
    fn symmetric_flapping_gives_pure_thrust() {
        let w = WingConfig::four_wing();
        let g = MixingMatrix::new(&w).unwrap();
        let u = g.mix(&ActuatorCommand::uniform(1.0));
        assert_eq!(u, Wrench::new(4.0 * w.k_f, Vec3::ZERO));
        let back = g.allocate(&u);
        assert!(!back.any_saturated());
        for v in back.command.0 {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn left_wings_roll_positive() {
        let w = WingConfig::four_wing();
        let g = MixingMatrix::new(&w).unwrap();
        let a = 3.0;
        let u = g.mix(&ActuatorCommand([0.0, 0.0, a, a]));
        assert_eq!(u.thrust, 2.0 * w.k_f * a);
        assert_eq!(u.torque.x, 2.0 * w.k_f * w.lever_arms[0] * a);
        assert_eq!(u.torque.y, 0.0);
        assert_eq!(u.torque.z, 0.0);
    }

    #[test]
    fn diagonal_pair_yaws_counter_clockwise() {
        let w = WingConfig::four_wing();
        let g = MixingMatrix::new(&w).unwrap();
        let a = 3.0;
        let u = g.mix(&ActuatorCommand([a, 0.0, 0.0, a]));
        assert_eq!(u.torque.x, 0.0);
        assert_eq!(u.torque.y, 0.0);
        assert!((u.torque.z - 2.0 * w.k_s * w.lever_arms[2] * a).abs() < 1e-24);
        assert!(u.torque.z > 0.0);
    }

    #[test]
    fn zero_coefficients_are_singular() {
        let mut w = WingConfig::four_wing();
        w.k_s = 0.0;
        assert_eq!(
            MixingMatrix::new(&w).unwrap_err(),
            AeroError::SingularMixing("k_s d3")
        );
        let two = WingConfig::two_wing_matched();
        assert_eq!(
            MixingMatrix::new(&two).unwrap_err(),
            AeroError::WingCount(2)
        );
    }

    #[test]
    fn saturation_is_reported_per_wing() {
        let w = WingConfig::four_wing();
        let g = MixingMatrix::new(&w).unwrap();
        let u = g.mix(&ActuatorCommand([300.0, 100.0, 100.0, -20.0]));
        let a = g.allocate(&u);
        assert_eq!(a.saturated, [true, false, false, true]);
        assert_eq!(a.command.0, [260.0, a.command.0[1], a.command.0[2], 0.0]);
    }

    #[test]
    fn sign_rows_are_orthogonal() {
        for i in 0..4 {
            for k in 0..4 {
                let d: f64 = (0..4)
                    .map(|j| MIXING_SIGNS[i][j] * MIXING_SIGNS[k][j])
                    .sum();
                assert_eq!(d, if i == k { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn validation_flags_amplitude_beyond_quadrant() {
        let mut w = WingConfig::four_wing();
        w.flap_amplitude = 100f64.to_radians();
        let v = w.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "wing.flap_amplitude_deg");
        assert!(WingConfig::four_wing().validate().is_empty());
    }

    proptest! {
        #[test]
        fn lift_quadratic_in_frequency(nu in 10.0..300.0f64, k in 0.1..5.0f64) {
            let mut w = WingConfig::four_wing();
            w.flap_frequency = nu;
            let a = cycle_avg_lift(&w);
            w.flap_frequency = nu * k;
            prop_assert!((cycle_avg_lift(&w) / a - k * k).abs() < 1e-10 * k * k);
        }

        #[test]
        fn matched_lift_damping_ratio_is_sqrt_area_ratio(
            ratio in 0.2..5.0f64,
            c1 in 0.01..10.0f64,
            c2 in 1e-6..1e-2f64,
            omega in -50.0..50.0f64,
        ) {
            let mut a = WingConfig::four_wing();
            a.c1 = c1;
            a.c2 = c2;
            let mut b = a;
            b.area = a.area / ratio;
            // keep nu^2 phi^2 S fixed by scaling frequency
            b.flap_frequency = a.flap_frequency * ratio.sqrt();
            prop_assert!((total_lift(&a) / total_lift(&b) - 1.0).abs() < 1e-12);
            prop_assume!(omega.abs() > 1e-6);
            let da = cycle_avg_damping(&a, omega, 0.0) * a.count as f64;
            let db = cycle_avg_damping(&b, omega, 0.0) * b.count as f64;
            prop_assert!((da / db - ratio.sqrt()).abs() < 1e-10);
        }

        #[test]
        fn allocate_inverts_mix(v in proptest::array::uniform4(1e-3..259.999f64)) {
            let g = MixingMatrix::new(&WingConfig::four_wing()).unwrap();
            let a = g.allocate(&g.mix(&ActuatorCommand(v)));
            prop_assert!(!a.any_saturated());
            for j in 0..4 {
                prop_assert!((a.command.0[j] - v[j]).abs() < 1e-10);
            }
        }
    }
}
