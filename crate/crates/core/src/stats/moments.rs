use serde::{Deserialize, Serialize};

use super::SensingModelParams;
use crate::error::{invalid, Result};
use crate::signal::STATIC_CLASS;
use crate::Scalar;

/// Mean and variance of the power difference for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats<T> {
    pub mu_delta: T,
    pub sigma_delta_sq: T,
}

impl<T: Scalar> DeltaStats<T> {
    pub fn sigma(&self) -> T {
        self.sigma_delta_sq.sqrt()
    }
}

fn check_rate<T: Scalar>(f: T) -> Result<()> {
    if !(f >= T::one() && f.is_finite()) {
        return Err(invalid(format!("sampling rate {f} must be >= 1")));
    }
    Ok(())
}

fn check_tau<T: Scalar>(model: &SensingModelParams<T>, tau: T) -> Result<()> {
    if !(tau > T::zero() && tau <= model.window_len_s) {
        return Err(invalid(format!(
            "time step {tau} must lie in (0, {}]",
            model.window_len_s
        )));
    }
    Ok(())
}

/// Mean and variance of the high-frequency window power of class `class_id`.
pub fn window_power_moments<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
) -> Result<(T, T)> {
    check_rate(f)?;
    let c = model.class_or_err(class_id)?;
    let n = model.window_len_s * f;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mu = c.lambda + c.r / n;
    let var = four * model.sigma_c_sq * c.lambda / n + two * model.sigma_c_sq * c.r / (n * n);
    Ok((mu, var))
}

/// Onset-averaged mean and deviation-augmented variance of the power
/// difference between consecutive windows.
pub fn delta_moments<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
    tau: T,
) -> Result<DeltaStats<T>> {
    check_rate(f)?;
    check_tau(model, tau)?;
    let c = model.class_or_err(class_id)?;
    let s = model.static_class();
    let t = model.window_len_s;
    let sc = model.sigma_c_sq;
    let (t3, t4) = (t * t * t, t * t * t * t);
    let tau2 = tau * tau;
    let lit = T::lit;
    if class_id == STATIC_CLASS {
        let var = tau2 * (lit(8.0) * sc * s.lambda / (t3 * f) + lit(4.0) * sc * s.r / (t4 * f * f));
        return Ok(DeltaStats {
            mu_delta: T::zero(),
            sigma_delta_sq: var + s.sigma_d_sq,
        });
    }
    let mu = tau
        * ((c.lambda - s.lambda) / (lit(2.0) * t) + (c.r - s.r) / (lit(2.0) * t * t * f));
    let var = tau2
        * (lit(4.0) * sc * (c.lambda + lit(4.0) * s.lambda) / (lit(3.0) * t3 * f)
            + lit(2.0) * sc * (c.r + lit(4.0) * s.r) / (lit(3.0) * t4 * f * f));
    Ok(DeltaStats {
        mu_delta: mu,
        sigma_delta_sq: var + c.sigma_d_sq,
    })
}

/// Moments of the power difference conditional on the action occupying the
/// last `t` seconds of the current step (`0 <= t <= tau`), deviation included.
pub fn conditional_delta_moments<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
    tau: T,
    t: T,
) -> Result<DeltaStats<T>> {
    check_tau(model, tau)?;
    if !(t >= T::zero() && t <= tau) {
        return Err(invalid(format!("onset offset {t} must lie in [0, {tau}]")));
    }
    let (mu_i, var_i) = window_power_moments(model, class_id, f)?;
    let (mu_1, var_1) = window_power_moments(model, STATIC_CLASS, f)?;
    let w = model.window_len_s;
    let a = t / w;
    let b = (tau - t) / w;
    let c = tau / w;
    let d = model.class_or_err(class_id)?.sigma_d_sq;
    Ok(DeltaStats {
        mu_delta: a * (mu_i - mu_1),
        sigma_delta_sq: a * a * var_i + b * b * var_1 + c * c * var_1 + d,
    })
}
