//! Sensing statistics, power and delay models, per-device optimization and
//! ADMM edge allocation for multi-device integrated sensing, communication
//! and computation.
//!
//! Numeric modules are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod device;
pub mod edge;
pub mod error;
pub mod experiment;
pub mod scalar;
pub mod perf;
pub mod scenario;
pub mod signal;
pub mod stats;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type CsiTrace = signal::CsiTrace<f64>;
pub type WindowSpec = signal::WindowSpec<f64>;
pub type DetectionEvent = signal::DetectionEvent<f64>;
pub type SensingModelParams = stats::SensingModelParams<f64>;
pub type ActionClassParams = stats::ActionClassParams<f64>;
pub type DeltaStats = stats::DeltaStats<f64>;
pub type DeviceProfile = perf::DeviceProfile<f64>;
pub type SystemConfig = perf::SystemConfig<f64>;
pub type AccuracySurface = perf::AccuracySurface<f64>;
pub type DecisionPoint = device::DecisionPoint<f64>;
pub type AdmmState = admm::AdmmState<f64>;
pub type Solution = admm::Solution<f64>;
