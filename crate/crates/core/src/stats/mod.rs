//! Closed-form power-difference statistics, detector rates and fitting.

mod detector;
pub mod fit;
mod moments;
mod params;
pub mod sampling;

pub use detector::{
    crossing_point, false_positive_rate, miss_rate, operating_point, q_function, Crossing,
    OperatingPoint, CROSSING_MAX_ITER, CROSSING_TOL,
};
pub use fit::{fit_model_params, FitConfig, FitReport};
pub use moments::{conditional_delta_moments, delta_moments, window_power_moments, DeltaStats};
pub use params::{default_model, ActionClassParams, SensingModelParams};
