//! Flight dynamics and control for a four-winged flapping-wing micro aerial
//! vehicle.
//!
//! * [`spatial`] vector, quaternion and rotation algebra
//! * [`aero`] cycle-averaged force models and the mixing matrix
//! * [`dynamics`] rigid-body plant with RK4 integration
//! * [`control`] attitude, position and altitude controllers
//! * [`estimation`] motion-capture emulation and rate estimation
//! * [`harness`] scenario files, runs, CSV records and comparisons

pub mod aero;
pub mod control;
pub mod dynamics;
pub mod estimation;
pub mod harness;
pub mod spatial;

pub use aero::{ActuatorCommand, Allocation, MixingMatrix, WingConfig, Wrench};
pub use control::{AttitudeGains, ControlConfig, ControlMode, Controller, PositionGains, Setpoint};
pub use dynamics::{InertialConfig, VehicleState, DEFAULT_DT};
pub use estimation::{Estimator, FilterConfig, MocapSample, MocapSensor};
pub use spatial::{Mat3, Quaternion, RotationMatrix, Vec3};
