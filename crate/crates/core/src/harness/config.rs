//! Scenario configuration files.
//!
//! Configs are TOML with the unit spelled out in every numeric key
//! (`mass_mg`, `beta`-style angles in `_deg`, lengths in `_mm` or `_m`).
//! The schema is versioned through the top-level `format_version` key.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{MixingMatrix, Violation, WingConfig, Wrench};
use crate::control::{AltitudeGains, AttitudeGains, ControlConfig, ControlMode, PositionGains};
use crate::dynamics::{InertialConfig, VehicleState, Vibration, DEFAULT_DT};
use crate::estimation::{FilterConfig, MOCAP_PERIOD};
use crate::spatial::{Mat3, Quaternion, Vec3};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("sweep parameter `{0}` does not name a config key")]
    BadParam(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AltitudeAttitude,
    PositionHold,
    YawDampingCompare,
    OpenLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    FourWing,
    TwoWing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format_version: u32,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub vehicle: VehicleSection,
    #[serde(default)]
    pub wing: WingSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub setpoint: SetpointSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub open_loop: OpenLoopSection,
    /// Wing overrides for the second variant of a yaw-damping comparison,
    /// applied on top of the resolved `[wing]` section.
    pub comparison: Option<WingSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub mode: Mode,
    pub duration_s: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_divergence_radius")]
    pub divergence_radius_m: f64,
}

fn default_divergence_radius() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleSection {
    pub mass_mg: f64,
    pub gravity_m_s2: f64,
    pub inertia_diag_kg_m2: [f64; 3],
    /// Products of inertia `[xy, xz, yz]`.
    pub inertia_offdiag_kg_m2: [f64; 3],
    /// Overrides the yaw damping derived from the wing model.
    pub yaw_damping_n_m_s_per_rad: Option<f64>,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            mass_mg: 95.0,
            gravity_m_s2: 9.81,
            inertia_diag_kg_m2: [1.5e-9, 1.5e-9, 0.5e-9],
            inertia_offdiag_kg_m2: [0.0; 3],
            yaw_damping_n_m_s_per_rad: None,
        }
    }
}

/// Every field is optional and overrides the variant preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct WingSection {
    pub count: Option<u32>,
    pub area_mm2: Option<f64>,
    pub flap_amplitude_deg: Option<f64>,
    pub flap_frequency_hz: Option<f64>,
    pub stroke_plane_inclination_deg: Option<f64>,
    pub lever_arm_roll_mm: Option<f64>,
    pub lever_arm_pitch_mm: Option<f64>,
    pub lever_arm_yaw_mm: Option<f64>,
    pub steering_arm_mm: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Recalibrates `c1` so the summed lift of all wings equals this value.
    pub lift_total_mn: Option<f64>,
    /// Recalibrates `k_f` so this command reproduces the per-wing lift.
    pub nominal_command_v: Option<f64>,
    pub k_f_n_per_v: Option<f64>,
    pub k_s_n_per_v: Option<f64>,
    pub v_max_v: Option<f64>,
}

impl WingSection {
    pub fn resolve(&self, base: &WingConfig) -> Result<WingConfig, Violation> {
        let mut w = *base;
        if let Some(v) = self.count {
            w.count = v;
        }
        if let Some(v) = self.area_mm2 {
            w.area = v * 1e-6;
        }
        if let Some(v) = self.flap_amplitude_deg {
            w.flap_amplitude = v.to_radians();
        }
        if let Some(v) = self.flap_frequency_hz {
            w.flap_frequency = v;
        }
        if let Some(v) = self.stroke_plane_inclination_deg {
            w.stroke_plane_inclination = v.to_radians();
        }
        if let Some(v) = self.lever_arm_roll_mm {
            w.lever_arms[0] = v * 1e-3;
        }
        if let Some(v) = self.lever_arm_pitch_mm {
            w.lever_arms[1] = v * 1e-3;
        }
        if let Some(v) = self.lever_arm_yaw_mm {
            w.lever_arms[2] = v * 1e-3;
        }
        if let Some(v) = self.steering_arm_mm {
            w.steering_arm = v * 1e-3;
        }
        if let Some(v) = self.c2 {
            w.c2 = v;
        }
        if let Some(v) = self.c3 {
            w.c3 = v;
        }
        match (self.c1, self.lift_total_mn) {
            (Some(_), Some(_)) => {
                return Err(Violation::new(
                    "wing.c1",
                    "give either c1 or lift_total_mn, not both",
                ))
            }
            (Some(c1), None) => w.c1 = c1,
            (None, Some(l)) => w.calibrate_lift(l * 1e-3),
            (None, None) => {}
        }
        match (self.k_f_n_per_v, self.nominal_command_v) {
            (Some(_), Some(_)) => {
                return Err(Violation::new(
                    "wing.k_f_n_per_v",
                    "give either k_f_n_per_v or nominal_command_v, not both",
                ))
            }
            (Some(k), None) => w.k_f = k,
            (None, Some(v)) => w.calibrate_force_coefficients(v),
            (None, None) => {}
        }
        w.k_s = self
            .k_s_n_per_v
            .unwrap_or(w.k_f * w.stroke_plane_inclination.sin());
        if let Some(v) = self.v_max_v {
            w.v_max = v;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub position_m: [f64; 3],
    pub velocity_m_s: [f64; 3],
    /// Roll, pitch, yaw (Z-Y-X).
    pub euler_deg: [f64; 3],
    pub angular_velocity_rad_s: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SetpointSection {
    pub position_m: [f64; 3],
    /// Fixed desired yaw; when absent the measured yaw is tracked.
    pub yaw_deg: Option<f64>,
    /// Later setpoint changes, in time order.
    pub steps: Vec<SetpointStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetpointStep {
    pub t_s: f64,
    pub position_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub attitude_k1_n_m: [f64; 3],
    pub attitude_k2_n_m_s: [f64; 3],
    pub position_kp_n_per_m: [f64; 3],
    pub position_kd_n_s_per_m: [f64; 3],
    pub position_ki_n_per_m_s: [f64; 3],
    pub position_integral_limit_m_s: [f64; 3],
    pub altitude_kp_n_per_m: f64,
    pub altitude_kd_n_s_per_m: f64,
    pub altitude_ki_n_per_m_s: f64,
    pub altitude_integral_limit_m_s: f64,
    pub yaw_feedback: bool,
    pub thrust_limit_mn: Option<f64>,
    /// Feed the controller the true state instead of the estimate.
    pub use_true_state: bool,
}

impl Default for ControlSection {
    fn default() -> Self {
        let a = AttitudeGains::default();
        let p = PositionGains::default();
        Self {
            attitude_k1_n_m: a.k1.to_array(),
            attitude_k2_n_m_s: a.k2.to_array(),
            position_kp_n_per_m: p.kp.to_array(),
            position_kd_n_s_per_m: p.kd.to_array(),
            position_ki_n_per_m_s: p.ki.to_array(),
            position_integral_limit_m_s: p.integral_limit.to_array(),
            altitude_kp_n_per_m: p.altitude.kp,
            altitude_kd_n_s_per_m: p.altitude.kd,
            altitude_ki_n_per_m_s: p.altitude.ki,
            altitude_integral_limit_m_s: p.altitude.integral_limit,
            yaw_feedback: false,
            thrust_limit_mn: None,
            use_true_state: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationSection {
    pub attitude_corner_hz: f64,
    pub velocity_corner_hz: f64,
    pub position_noise_mm: f64,
    pub attitude_noise_deg: f64,
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self {
            attitude_corner_hz: 30.0,
            velocity_corner_hz: 20.0,
            position_noise_mm: 0.0,
            attitude_noise_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    /// Roll and pitch vibration torque amplitudes; zero disables.
    pub vibration_amplitude_n_m: [f64; 2],
    pub vibration_frequency_hz: f64,
    pub vibration_pitch_phase_deg: f64,
    pub vibration_ramp_s: f64,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        Self {
            vibration_amplitude_n_m: [0.0; 2],
            vibration_frequency_hz: 100.0,
            vibration_pitch_phase_deg: 90.0,
            vibration_ramp_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OpenLoopSection {
    /// Constant thrust; defaults to the vehicle weight.
    pub thrust_mn: Option<f64>,
    pub torque_n_m: [f64; 3],
}

/// Piecewise-constant setpoint schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SetpointSchedule {
    pub initial: crate::control::Setpoint,
    pub steps: Vec<(f64, Vec3)>,
}

impl SetpointSchedule {
    pub fn at(&self, t: f64) -> crate::control::Setpoint {
        let mut sp = self.initial;
        for (ts, p) in &self.steps {
            if t >= *ts {
                sp.position = *p;
            }
        }
        sp
    }
}

/// A fully resolved, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub variant: Variant,
    pub duration: f64,
    pub dt: f64,
    pub divergence_radius: f64,
    pub wing: WingConfig,
    pub comparison_wing: Option<WingConfig>,
    pub inertial: InertialConfig,
    /// Explicit yaw damping, if the config overrides the wing-derived value.
    pub yaw_damping_override: Option<f64>,
    pub initial: VehicleState,
    pub setpoints: SetpointSchedule,
    pub control: ControlConfig,
    pub use_true_state: bool,
    pub filter: FilterConfig,
    pub open_loop: Wrench,
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_file(&ConfigFile::load(path)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_file(&ConfigFile::parse(text)?)
    }

    pub fn from_file(f: &ConfigFile) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();
        if f.format_version != FORMAT_VERSION {
            errs.push(Violation::new(
                "format_version",
                format!(
                    "unsupported version {}, expected {FORMAT_VERSION}",
                    f.format_version
                ),
            ));
        }
        let sc = &f.scenario;
        if !(sc.duration_s > 0.0 && sc.duration_s.is_finite()) {
            errs.push(Violation::new(
                "scenario.duration_s",
                "duration must be positive",
            ));
        }
        if !(sc.divergence_radius_m > 0.0) {
            errs.push(Violation::new(
                "scenario.divergence_radius_m",
                "must be positive",
            ));
        }

        let base = match sc.variant {
            Variant::FourWing => WingConfig::four_wing(),
            Variant::TwoWing => WingConfig::two_wing_matched(),
        };
        let wing = f.wing.resolve(&base).unwrap_or_else(|v| {
            errs.push(v);
            base
        });
        errs.extend(wing.validate());
        let comparison_wing = f.comparison.as_ref().map(|c| {
            c.resolve(&wing).unwrap_or_else(|v| {
                errs.push(v);
                wing
            })
        });
        if let Some(cw) = &comparison_wing {
            errs.extend(cw.validate().into_iter().map(|mut v| {
                v.field = v.field.replacen("wing", "comparison", 1);
                v
            }));
        }
        if sc.mode == Mode::YawDampingCompare && comparison_wing.is_none() {
            errs.push(Violation::new(
                "comparison",
                "yaw-damping-compare needs a [comparison] section",
            ));
        }
        let closed_loop = matches!(sc.mode, Mode::AltitudeAttitude | Mode::PositionHold);
        if closed_loop || sc.mode == Mode::YawDampingCompare {
            if wing.count == 4 {
                if let Err(e) = MixingMatrix::new(&wing) {
                    errs.push(Violation::new("wing", e.to_string()));
                }
            } else if closed_loop {
                errs.push(Violation::new(
                    "wing.count",
                    "closed-loop modes allocate over exactly four wings",
                ));
            }
        }

        let v = &f.vehicle;
        let [ixx, iyy, izz] = v.inertia_diag_kg_m2;
        let [ixy, ixz, iyz] = v.inertia_offdiag_kg_m2;
        let inertia = Mat3::from_rows([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]]);
        let mut inertial = match InertialConfig::new(v.mass_mg * 1e-6, inertia, v.gravity_m_s2) {
            Ok(c) => c,
            Err(e) => {
                errs.push(Violation::new("vehicle.inertia_diag_kg_m2", e.to_string()));
                InertialConfig::four_wing()
            }
        };
        inertial.yaw_damping = v
            .yaw_damping_n_m_s_per_rad
            .unwrap_or_else(|| crate::aero::yaw_damping_coefficient(&wing));
        let d = &f.disturbance;
        if d.vibration_amplitude_n_m.iter().any(|a| *a != 0.0) {
            inertial.vibration = Some(Vibration {
                amplitude: d.vibration_amplitude_n_m,
                frequency: d.vibration_frequency_hz,
                pitch_phase: d.vibration_pitch_phase_deg.to_radians(),
                ramp: d.vibration_ramp_s,
            });
        }
        errs.extend(inertial.validate());

        let c = &f.control;
        let control = ControlConfig {
            mode: if sc.mode == Mode::PositionHold {
                ControlMode::Position
            } else {
                ControlMode::AltitudeAttitude
            },
            attitude: AttitudeGains {
                k1: Vec3::from_array(c.attitude_k1_n_m),
                k2: Vec3::from_array(c.attitude_k2_n_m_s),
            },
            position: PositionGains {
                kp: Vec3::from_array(c.position_kp_n_per_m),
                kd: Vec3::from_array(c.position_kd_n_s_per_m),
                ki: Vec3::from_array(c.position_ki_n_per_m_s),
                integral_limit: Vec3::from_array(c.position_integral_limit_m_s),
                altitude: AltitudeGains {
                    kp: c.altitude_kp_n_per_m,
                    kd: c.altitude_kd_n_s_per_m,
                    ki: c.altitude_ki_n_per_m_s,
                    integral_limit: c.altitude_integral_limit_m_s,
                },
            },
            yaw_feedback: c.yaw_feedback,
            thrust_limit: c.thrust_limit_mn.map(|t| t * 1e-3),
        };
        errs.extend(control.attitude.validate());
        errs.extend(control.position.validate());
        if let Some(t) = control.thrust_limit {
            if !(t > 0.0) {
                errs.push(Violation::new(
                    "control.thrust_limit_mn",
                    "must be positive",
                ));
            }
        }

        let e = &f.estimation;
        let filter = FilterConfig {
            attitude_corner: TAU * e.attitude_corner_hz,
            velocity_corner: TAU * e.velocity_corner_hz,
            position_noise: e.position_noise_mm * 1e-3,
            attitude_noise: e.attitude_noise_deg.to_radians(),
            seed: 0,
            sample_period: MOCAP_PERIOD,
        };
        errs.extend(filter.validate());

        let i = &f.initial;
        let [roll, pitch, yaw] = i.euler_deg.map(f64::to_radians);
        let initial = VehicleState {
            position: Vec3::from_array(i.position_m),
            velocity: Vec3::from_array(i.velocity_m_s),
            attitude: Quaternion::from_euler_zyx(roll, pitch, yaw),
            angular_velocity: Vec3::from_array(i.angular_velocity_rad_s),
            time: 0.0,
        };
        if !initial.is_finite() {
            errs.push(Violation::new("initial", "initial state must be finite"));
        }

        let s = &f.setpoint;
        let setpoints = SetpointSchedule {
            initial: crate::control::Setpoint {
                position: Vec3::from_array(s.position_m),
                yaw: s.yaw_deg.map(f64::to_radians),
                ..Default::default()
            },
            steps: s
                .steps
                .iter()
                .map(|st| (st.t_s, Vec3::from_array(st.position_m)))
                .collect(),
        };
        if !setpoints.initial.position.is_finite()
            || setpoints
                .steps
                .iter()
                .any(|(t, p)| !t.is_finite() || !p.is_finite())
        {
            errs.push(Violation::new("setpoint", "setpoints must be finite"));
        }
        if setpoints.steps.windows(2).any(|w| w[1].0 < w[0].0) {
            errs.push(Violation::new(
                "setpoint.steps",
                "steps must be in time order",
            ));
        }

        let o = &f.open_loop;
        let open_loop = Wrench::new(
            o.thrust_mn.map(|t| t * 1e-3).unwrap_or(inertial.weight()),
            Vec3::from_array(o.torque_n_m),
        );
        if !(open_loop.thrust.is_finite() && open_loop.torque.is_finite()) {
            errs.push(Violation::new("open_loop", "wrench must be finite"));
        }

        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Ok(Scenario {
            name: sc.name.clone(),
            mode: sc.mode,
            variant: sc.variant,
            duration: sc.duration_s,
            dt: DEFAULT_DT,
            divergence_radius: sc.divergence_radius_m,
            wing,
            comparison_wing,
            inertial,
            yaw_damping_override: v.yaw_damping_n_m_s_per_rad,
            initial,
            setpoints,
            control,
            use_true_state: c.use_true_state,
            filter,
            open_loop,
        })
    }

    /// Number of control ticks; the record holds one more row than this.
    pub fn ticks(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Returns a copy with the dotted key `path` set to `value` (a TOML
    /// literal such as `80`, `true` or `"open-loop"`). Missing tables and
    /// keys are created; the result is re-checked against the schema.
    pub fn with_param(&self, path: &str, value: &str) -> Result<Self, ConfigError> {
        let mut root =
            toml::Value::try_from(self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let parsed = parse_literal(value)?;
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(ConfigError::BadParam(path.to_string()));
        }
        let mut node = &mut root;
        for k in &keys[..keys.len() - 1] {
            let table = node
                .as_table_mut()
                .ok_or_else(|| ConfigError::BadParam(path.to_string()))?;
            node = table
                .entry(k.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
        }
        node.as_table_mut()
            .ok_or_else(|| ConfigError::BadParam(path.to_string()))?
            .insert(keys[keys.len() - 1].to_string(), parsed);
        root.try_into::<ConfigFile>().map_err(|e| {
            if e.to_string().contains("unknown field") {
                ConfigError::BadParam(path.to_string())
            } else {
                ConfigError::Parse(e.to_string())
            }
        })
    }
}

fn parse_literal(value: &str) -> Result<toml::Value, ConfigError> {
    let doc = format!("v = {value}");
    let t: toml::Table = toml::from_str(&doc)
        .or_else(|_| toml::from_str(&format!("v = {:?}", value)))
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let v = t.get("v").cloned().expect("literal parsed under key v");
    // integers sweep float keys too
    Ok(match v {
        toml::Value::Integer(i) => toml::Value::Float(i as f64),
        other => other,
    })
}

/// Validates a config file and returns every violation found.
pub fn validate_config(path: impl AsRef<Path>) -> Result<Scenario, ConfigError> {
    Scenario::from_path(path)
}
