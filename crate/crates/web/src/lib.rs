//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: a hover run with adjustable vibration,
//! the wrench-to-command allocator, and the four-wing versus two-wing yaw
//! decay comparison. Each has a plain Rust entry point used by the native
//! tests and a thin `#[wasm_bindgen]` wrapper.

use wasm_bindgen::prelude::*;

use flapsim::aero::{MixingMatrix, WingConfig, Wrench};
use flapsim::harness::{self, bundled, ConfigFile, RunRecord, Scenario};
use flapsim::spatial::Vec3;

/// Rows kept per plotted sample (2 kHz / 10 = 200 Hz).
const DECIMATE: usize = 10;

fn bundled_file(name: &str) -> Result<ConfigFile, String> {
    let text = bundled(name).ok_or_else(|| format!("no bundled scenario {name}"))?;
    ConfigFile::parse(text).map_err(|e| e.to_string())
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct HoverRun {
    time: Vec<f64>,
    altitude: Vec<f64>,
    roll: Vec<f64>,
    pitch: Vec<f64>,
    max_tilt: f64,
    reach_time: f64,
    saturated_ticks: usize,
    diverged: bool,
}

#[wasm_bindgen]
impl HoverRun {
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> Vec<f64> {
        self.time.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn altitude(&self) -> Vec<f64> {
        self.altitude.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn roll(&self) -> Vec<f64> {
        self.roll.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn pitch(&self) -> Vec<f64> {
        self.pitch.clone()
    }
    /// Largest |roll| or |pitch| over the run, degrees.
    #[wasm_bindgen(getter, js_name = maxTilt)]
    pub fn max_tilt(&self) -> f64 {
        self.max_tilt
    }
    /// First time within 20% of the altitude step, s (NaN if never).
    #[wasm_bindgen(getter, js_name = reachTime)]
    pub fn reach_time(&self) -> f64 {
        self.reach_time
    }
    #[wasm_bindgen(getter, js_name = saturatedTicks)]
    pub fn saturated_ticks(&self) -> usize {
        self.saturated_ticks
    }
    #[wasm_bindgen(getter)]
    pub fn diverged(&self) -> bool {
        self.diverged
    }
}

fn euler_deg(rec: &RunRecord) -> (Vec<f64>, Vec<f64>) {
    rec.rows
        .iter()
        .step_by(DECIMATE)
        .map(|r| {
            let (roll, pitch, _) = r.truth.attitude.to_euler_zyx();
            (roll.to_degrees(), pitch.to_degrees())
        })
        .unzip()
}

/// Runs the bundled hover scenario with the given roll/pitch vibration
/// amplitude (N m) and altitude setpoint (m).
pub fn hover_run(vibration: f64, altitude: f64, seed: u64) -> Result<HoverRun, String> {
    let mut f = bundled_file("hover.cfg")?;
    f.disturbance.vibration_amplitude_n_m = [vibration; 2];
    f.setpoint.position_m[2] = altitude;
    let sc = Scenario::from_file(&f).map_err(|e| e.to_string())?;
    let out = harness::run(&sc, seed);
    let m = out.record.metrics();
    let (roll, pitch) = euler_deg(&out.record);
    let rows = out.record.rows.iter().step_by(DECIMATE);
    Ok(HoverRun {
        time: rows.clone().map(|r| r.time).collect(),
        altitude: rows.map(|r| r.truth.position.z).collect(),
        roll,
        pitch,
        max_tilt: m.max_abs_roll_deg.max(m.max_abs_pitch_deg),
        reach_time: m.altitude_reach_time_s,
        saturated_ticks: m.saturated_ticks,
        diverged: out.diverged(),
    })
}

#[wasm_bindgen]
pub fn hover(vibration_n_m: f64, altitude_m: f64, seed: u32) -> Result<HoverRun, JsError> {
    hover_run(vibration_n_m, altitude_m, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct AllocationView {
    commands: Vec<f64>,
    saturated: Vec<u8>,
    achieved: Vec<f64>,
}

#[wasm_bindgen]
impl AllocationView {
    /// Per-wing drive amplitudes, V.
    #[wasm_bindgen(getter)]
    pub fn commands(&self) -> Vec<f64> {
        self.commands.clone()
    }
    /// 1 where a wing hit the drive limits.
    #[wasm_bindgen(getter)]
    pub fn saturated(&self) -> Vec<u8> {
        self.saturated.clone()
    }
    /// Wrench produced by the clamped commands: thrust in mN, torques in
    /// nN m.
    #[wasm_bindgen(getter)]
    pub fn achieved(&self) -> Vec<f64> {
        self.achieved.clone()
    }
}

/// Allocates a wrench (thrust in mN, torques in nN m) over the four wings
/// of the default vehicle.
pub fn allocate_wrench(
    thrust_mn: f64,
    roll: f64,
    pitch: f64,
    yaw: f64,
) -> Result<AllocationView, String> {
    let mixer = MixingMatrix::new(&WingConfig::four_wing()).map_err(|e| e.to_string())?;
    let u = Wrench::new(thrust_mn * 1e-3, Vec3::new(roll, pitch, yaw) * 1e-9);
    let a = mixer.allocate(&u);
    let got = mixer.mix(&a.command);
    Ok(AllocationView {
        commands: a.command.0.to_vec(),
        saturated: a.saturated.iter().map(|&s| s as u8).collect(),
        achieved: vec![
            got.thrust * 1e3,
            got.torque.x * 1e9,
            got.torque.y * 1e9,
            got.torque.z * 1e9,
        ],
    })
}

#[wasm_bindgen]
pub fn allocate(
    thrust_mn: f64,
    roll_nn_m: f64,
    pitch_nn_m: f64,
    yaw_nn_m: f64,
) -> Result<AllocationView, JsError> {
    allocate_wrench(thrust_mn, roll_nn_m, pitch_nn_m, yaw_nn_m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct YawDecay {
    time: Vec<f64>,
    four_wing: Vec<f64>,
    two_wing: Vec<f64>,
    ratio: f64,
}

#[wasm_bindgen]
impl YawDecay {
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> Vec<f64> {
        self.time.clone()
    }
    #[wasm_bindgen(getter, js_name = fourWing)]
    pub fn four_wing(&self) -> Vec<f64> {
        self.four_wing.clone()
    }
    #[wasm_bindgen(getter, js_name = twoWing)]
    pub fn two_wing(&self) -> Vec<f64> {
        self.two_wing.clone()
    }
    /// Four-wing over two-wing decay time constant.
    #[wasm_bindgen(getter)]
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// Free yaw decay from `rate` rad/s for the four-wing vehicle and the
/// two-wing variant with matched lift.
pub fn yaw_decay_run(rate: f64, duration: f64) -> Result<YawDecay, String> {
    let mut f = bundled_file("yaw_damp.cfg")?;
    f.initial.angular_velocity_rad_s = [0.0, 0.0, rate];
    f.scenario.duration_s = duration;
    let sc = Scenario::from_file(&f).map_err(|e| e.to_string())?;
    let out = harness::run(&sc, 0);
    let cmp = out
        .comparison
        .as_ref()
        .ok_or("scenario has no comparison variant")?;
    let rates = |rec: &RunRecord| -> Vec<f64> {
        rec.rows
            .iter()
            .step_by(DECIMATE)
            .map(|r| r.truth.angular_velocity.z)
            .collect()
    };
    Ok(YawDecay {
        time: out
            .record
            .rows
            .iter()
            .step_by(DECIMATE)
            .map(|r| r.time)
            .collect(),
        four_wing: rates(&out.record),
        two_wing: rates(cmp),
        ratio: out.yaw_decay_ratio().unwrap_or(f64::NAN),
    })
}

#[wasm_bindgen(js_name = yawDecay)]
pub fn yaw_decay(rate_rad_s: f64, duration_s: f64) -> Result<YawDecay, JsError> {
    yaw_decay_run(rate_rad_s, duration_s).map_err(|e| JsError::new(&e))
}
