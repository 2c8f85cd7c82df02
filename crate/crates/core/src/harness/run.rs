//! Fixed-step closed-loop simulation of a resolved [`Scenario`].

use crate::aero::{yaw_damping_coefficient, MixingMatrix, WingConfig};
use crate::control::Controller;
use crate::dynamics::{step, VehicleState};
use crate::estimation::{Estimator, MocapSensor};
use crate::harness::config::{Mode, Scenario};
use crate::harness::record::{Metrics, Row, RunRecord, RunStatus};

/// Output of [`run`]: the primary record plus, for yaw-damping
/// comparisons, the record of the second variant.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub comparison: Option<RunRecord>,
}

impl RunOutput {
    pub fn diverged(&self) -> bool {
        self.record.diverged() || self.comparison.as_ref().is_some_and(|c| c.diverged())
    }

    /// Ratio of the primary to the comparison yaw-decay time constant.
    pub fn yaw_decay_ratio(&self) -> Option<f64> {
        let c = self.comparison.as_ref()?;
        Some(
            self.record.metrics().yaw_decay_time_constant_s / c.metrics().yaw_decay_time_constant_s,
        )
    }

    /// Structured `key = value` summary.
    pub fn summary(&self) -> String {
        let mut s = format!("scenario = {}\n", self.record.name);
        s.push_str(&status_line(&self.record.status));
        s.push_str(&self.record.metrics().to_text());
        if let Some(c) = &self.comparison {
            s.push_str(&format!("[comparison]\nscenario = {}\n", c.name));
            s.push_str(&status_line(&c.status));
            s.push_str(&c.metrics().to_text());
            s.push_str(&format!(
                "yaw_decay_time_constant_ratio = {}\n",
                self.yaw_decay_ratio().unwrap_or(f64::NAN)
            ));
        }
        s
    }
}

fn status_line(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "status = completed\n".to_string(),
        RunStatus::Diverged { time, reason } => {
            format!("status = diverged\ndiverged_at_s = {time}\ndivergence_reason = {reason}\n")
        }
    }
}

/// Runs the scenario with the given noise seed.
pub fn run(scenario: &Scenario, seed: u64) -> RunOutput {
    let record = simulate(scenario, &scenario.wing, seed, &scenario.name);
    let comparison = match (scenario.mode, &scenario.comparison_wing) {
        (Mode::YawDampingCompare, Some(w)) => Some(simulate(
            scenario,
            w,
            seed,
            &format!("{}-comparison", scenario.name),
        )),
        _ => None,
    };
    RunOutput { record, comparison }
}

fn divergence(s: &VehicleState, radius: f64) -> Option<String> {
    if !s.is_finite() {
        Some("non-finite state".to_string())
    } else if s.position.norm() > radius {
        Some(format!("left the {radius} m volume"))
    } else {
        None
    }
}

fn simulate(sc: &Scenario, wing: &WingConfig, seed: u64, name: &str) -> RunRecord {
    let mut inertial = sc.inertial;
    inertial.yaw_damping = sc
        .yaw_damping_override
        .unwrap_or_else(|| yaw_damping_coefficient(wing));

    let closed_loop = matches!(sc.mode, Mode::AltitudeAttitude | Mode::PositionHold);
    let mut controller = if closed_loop {
        Some(
            Controller::new(sc.control, wing, inertial.mass, inertial.gravity, sc.dt)
                .expect("validated scenario has an invertible mixer"),
        )
    } else {
        None
    };
    let mixer = MixingMatrix::new(wing).ok();
    let mut filter = sc.filter;
    filter.seed = seed;
    let mut sensor = MocapSensor::new(&filter);
    let mut estimator = Estimator::new(&filter);
    let per_sample = ((filter.sample_period / sc.dt).round() as usize).max(1);

    let n = sc.ticks();
    let mut rows = Vec::with_capacity(n + 1);
    let mut state = sc.initial;
    let mut status = RunStatus::Completed;

    for k in 0..=n {
        let t = k as f64 * sc.dt;
        state.time = t;
        let sp = sc.setpoints.at(t);

        let sample = (k % per_sample == 0).then(|| sensor.sample(&state));
        let estimate = estimator.tick(sample.as_ref());
        let feedback = if sc.use_true_state { state } else { estimate };

        let (requested, allocation, applied) = match controller.as_mut() {
            Some(c) => {
                let out = c.tick(&feedback, &sp).unwrap_or_else(|_| c.last_output());
                let applied = c.mixer().mix(&out.allocation.command);
                (out.wrench, out.allocation, applied)
            }
            None => {
                let alloc = mixer
                    .as_ref()
                    .map(|m| m.allocate(&sc.open_loop))
                    .unwrap_or_default();
                (sc.open_loop, alloc, sc.open_loop)
            }
        };

        rows.push(Row {
            time: t,
            truth: state,
            estimate,
            setpoint: sp.position,
            wrench: requested,
            command: allocation.command.0,
            saturated: allocation.saturated,
        });

        if let Some(reason) = divergence(&state, sc.divergence_radius) {
            status = RunStatus::Diverged { time: t, reason };
            break;
        }
        if k < n {
            match step(&state, &applied, &inertial, sc.dt) {
                Ok(next) => state = next,
                Err(e) => {
                    status = RunStatus::Diverged {
                        time: t,
                        reason: e.to_string(),
                    };
                    break;
                }
            }
        }
    }

    RunRecord {
        name: name.to_string(),
        rows,
        status,
    }
}

/// Convenience for callers that only need the metrics.
pub fn run_metrics(scenario: &Scenario, seed: u64) -> Metrics {
    run(scenario, seed).record.metrics()
}
