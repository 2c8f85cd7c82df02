//! Motion-capture emulation and the pose-based state estimator.
//!
//! Pose samples arrive at 500 Hz. Angular velocity comes from a filtered
//! derivative of the attitude quaternion, `[0, w] = 2 q^-1 * H(s) q` with
//! `H(s) = l s / (s + l)`, discretized with the bilinear transform at the
//! sample rate. Translational velocity is a backward difference followed by
//! a first-order low-pass. Between samples the estimate is held.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::aero::Violation;
use crate::dynamics::VehicleState;
use crate::spatial::{Quaternion, Vec3};

/// Motion-capture sample period, s (500 Hz).
pub const MOCAP_PERIOD: f64 = 1.0 / 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocapSample {
    pub position: Vec3,
    pub attitude: Quaternion,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Corner of the quaternion derivative filter, rad/s.
    pub attitude_corner: f64,
    /// Corner of the velocity low-pass, rad/s.
    pub velocity_corner: f64,
    /// Position noise standard deviation, m.
    pub position_noise: f64,
    /// Attitude noise standard deviation per axis, rad.
    pub attitude_noise: f64,
    pub seed: u64,
    pub sample_period: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            attitude_corner: TAU * 30.0,
            velocity_corner: TAU * 20.0,
            position_noise: 0.0,
            attitude_noise: 0.0,
            seed: 0,
            sample_period: MOCAP_PERIOD,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.attitude_corner > 0.0 && self.attitude_corner.is_finite()) {
            out.push(Violation::new(
                "estimation.attitude_corner_hz",
                "must be positive",
            ));
        }
        if !(self.velocity_corner > 0.0 && self.velocity_corner.is_finite()) {
            out.push(Violation::new(
                "estimation.velocity_corner_hz",
                "must be positive",
            ));
        }
        if !(self.position_noise >= 0.0) {
            out.push(Violation::new(
                "estimation.position_noise_mm",
                "must be non-negative",
            ));
        }
        if !(self.attitude_noise >= 0.0) {
            out.push(Violation::new(
                "estimation.attitude_noise_deg",
                "must be non-negative",
            ));
        }
        if !(self.sample_period > 0.0) {
            out.push(Violation::new(
                "estimation.sample_period",
                "must be positive",
            ));
        }
        out
    }
}

/// Emulated motion-capture system with seeded Gaussian noise.
#[derive(Debug, Clone)]
pub struct MocapSensor {
    position_noise: Option<Normal<f64>>,
    attitude_noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl MocapSensor {
    pub fn new(cfg: &FilterConfig) -> Self {
        let normal = |s: f64| (s > 0.0).then(|| Normal::new(0.0, s).expect("finite std-dev"));
        Self {
            position_noise: normal(cfg.position_noise),
            attitude_noise: normal(cfg.attitude_noise),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    /// True pose plus noise: additive on position, a body-frame rotation
    /// vector perturbation on attitude.
    pub fn sample(&mut self, truth: &VehicleState) -> MocapSample {
        let mut position = truth.position;
        if let Some(n) = &self.position_noise {
            let rng = &mut self.rng;
            position += Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        }
        let mut attitude = truth.attitude;
        if let Some(n) = &self.attitude_noise {
            let rng = &mut self.rng;
            let rv = Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
            attitude = attitude
                .mul(Quaternion::from_rotation_vector(rv))
                .normalized();
        }
        MocapSample {
            position,
            attitude,
            time: truth.time,
        }
    }
}

pub fn sample_mocap(truth: &VehicleState, sensor: &mut MocapSensor) -> MocapSample {
    sensor.sample(truth)
}

/// Bilinear discretization of `l s / (s + l)` applied componentwise to a
/// four-channel signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredDerivative {
    b: f64,
    a1: f64,
    prev_input: Option<[f64; 4]>,
    output: [f64; 4],
}

impl FilteredDerivative {
    pub fn new(corner: f64, period: f64) -> Self {
        let k = 2.0 / period;
        Self {
            b: corner * k / (k + corner),
            a1: (corner - k) / (k + corner),
            prev_input: None,
            output: [0.0; 4],
        }
    }

    /// `y[n] = b (x[n] - x[n-1]) - a1 y[n-1]`. The first input primes the
    /// state so a constant signal produces no transient.
    pub fn apply(&mut self, x: [f64; 4]) -> [f64; 4] {
        let prev = self.prev_input.unwrap_or(x);
        for i in 0..4 {
            self.output[i] = self.b * (x[i] - prev[i]) - self.a1 * self.output[i];
        }
        self.prev_input = Some(x);
        self.output
    }

    pub fn output(&self) -> [f64; 4] {
        self.output
    }

    /// Magnitude of the discrete transfer function at `freq` rad/s.
    pub fn gain(&self, freq: f64, period: f64) -> f64 {
        let z = (freq * period).sin_cos();
        // |b (1 - z^-1)| / |1 + a1 z^-1| with z^-1 = cos - j sin
        let num = self.b * ((1.0 - z.1).powi(2) + z.0.powi(2)).sqrt();
        let den = ((1.0 + self.a1 * z.1).powi(2) + (self.a1 * z.0).powi(2)).sqrt();
        num / den
    }
}

/// Angular-rate estimate from the attitude quaternion stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularRateFilter {
    derivative: FilteredDerivative,
    last: Option<Quaternion>,
    residual: f64,
}

impl AngularRateFilter {
    pub fn new(corner: f64, period: f64) -> Self {
        Self {
            derivative: FilteredDerivative::new(corner, period),
            last: None,
            residual: 0.0,
        }
    }

    /// Aligns `q` with the previous sample's hemisphere.
    pub fn align(&self, q: Quaternion) -> Quaternion {
        match self.last {
            Some(p) if p.dot(&q) < 0.0 => -q,
            _ => q,
        }
    }

    pub fn update(&mut self, q: Quaternion) -> Vec3 {
        let q = self.align(q);
        let d = Quaternion::from_array(self.derivative.apply(q.to_array()));
        let p = q.inverse().mul(d).scale(2.0);
        self.residual = p.w;
        self.last = Some(q);
        p.v
    }

    /// Scalar part of the last `2 q^-1 * H q` product; zero in the ideal
    /// continuous-time limit.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn last_quaternion(&self) -> Option<Quaternion> {
        self.last
    }
}

/// Backward difference followed by a first-order low-pass (exact
/// zero-order-hold discretization of `l / (s + l)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityFilter {
    alpha: f64,
    period: f64,
    prev: Option<Vec3>,
    output: Vec3,
}

impl VelocityFilter {
    pub fn new(corner: f64, period: f64) -> Self {
        Self {
            alpha: (-corner * period).exp(),
            period,
            prev: None,
            output: Vec3::ZERO,
        }
    }

    pub fn update(&mut self, r: Vec3) -> Vec3 {
        let d = match self.prev {
            Some(p) => (r - p) / self.period,
            None => Vec3::ZERO,
        };
        self.prev = Some(r);
        self.output = self.output * self.alpha + d * (1.0 - self.alpha);
        self.output
    }

    /// Magnitude of the difference-plus-low-pass chain at `freq` rad/s.
    pub fn gain(&self, freq: f64) -> f64 {
        let (s, c) = (freq * self.period).sin_cos();
        let diff = ((1.0 - c).powi(2) + s * s).sqrt() / self.period;
        let lp =
            (1.0 - self.alpha) / ((1.0 - self.alpha * c).powi(2) + (self.alpha * s).powi(2)).sqrt();
        diff * lp
    }
}

/// Sample-and-hold estimator running inside the faster control loop.
#[derive(Debug, Clone)]
pub struct Estimator {
    rate: AngularRateFilter,
    velocity: VelocityFilter,
    estimate: VehicleState,
    updates: u64,
}

impl Estimator {
    pub fn new(cfg: &FilterConfig) -> Self {
        Self {
            rate: AngularRateFilter::new(cfg.attitude_corner, cfg.sample_period),
            velocity: VelocityFilter::new(cfg.velocity_corner, cfg.sample_period),
            estimate: VehicleState::default(),
            updates: 0,
        }
    }

    /// Folds in a new sample when one arrived this tick; otherwise returns
    /// the held estimate.
    pub fn tick(&mut self, sample: Option<&MocapSample>) -> VehicleState {
        if let Some(m) = sample {
            let q = self.rate.align(m.attitude);
            self.estimate = VehicleState {
                position: m.position,
                velocity: self.velocity.update(m.position),
                attitude: q,
                angular_velocity: self.rate.update(q),
                time: m.time,
            };
            self.updates += 1;
        }
        self.estimate
    }

    pub fn estimate(&self) -> &VehicleState {
        &self.estimate
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn rate_filter(&self) -> &AngularRateFilter {
        &self.rate
    }
}

/// Runs the rate filter over a stream and returns the final estimate.
pub fn estimate_angular_velocity<I>(stream: I, cfg: &FilterConfig) -> Vec3
where
    I: IntoIterator<Item = Quaternion>,
{
    let mut f = AngularRateFilter::new(cfg.attitude_corner, cfg.sample_period);
    stream.into_iter().fold(Vec3::ZERO, |_, q| f.update(q))
}

/// Runs the velocity filter over a stream and returns the final estimate.
pub fn estimate_velocity<I>(stream: I, cfg: &FilterConfig) -> Vec3
where
    I: IntoIterator<Item = Vec3>,
{
    let mut f = VelocityFilter::new(cfg.velocity_corner, cfg.sample_period);
    stream.into_iter().fold(Vec3::ZERO, |_, r| f.update(r))
}
