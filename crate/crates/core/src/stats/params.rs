use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::STATIC_CLASS;
use crate::Scalar;

/// Statistical fingerprint of one class (class 1 is the static phase).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ActionClassParams<T> {
    pub class_id: u32,
    #[serde(default)]
    pub name: String,
    pub lambda: T,
    pub r: T,
    pub sigma_d_sq: T,
    pub q: T,
}

/// Window-power model shared by every class plus the analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SensingModelParams<T> {
    pub classes: Vec<ActionClassParams<T>>,
    pub sigma_c_sq: T,
    pub window_len_s: T,
    pub band_lo_hz: T,
    pub band_hi_hz: T,
}

impl<T: Scalar> SensingModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.class(STATIC_CLASS).is_none() {
            return Err(invalid("static class 1 missing"));
        }
        if self.classes.len() < 2 {
            return Err(invalid("at least one action class is required"));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|o| o.class_id == c.class_id) {
                return Err(invalid(format!("duplicate class id {}", c.class_id)));
            }
            if !(c.lambda >= T::zero() && c.lambda.is_finite()) {
                return Err(invalid(format!("class {}: lambda must be >= 0", c.class_id)));
            }
            if !c.r.is_finite() {
                return Err(invalid(format!("class {}: r must be finite", c.class_id)));
            }
            if !(c.sigma_d_sq >= T::zero() && c.sigma_d_sq.is_finite()) {
                return Err(invalid(format!("class {}: sigma_d_sq must be >= 0", c.class_id)));
            }
            if !(c.q >= T::zero() && c.q <= T::one()) {
                return Err(invalid(format!("class {}: prior must lie in [0, 1]", c.class_id)));
            }
        }
        let total: T = self.classes.iter().map(|c| c.q).sum();
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
            return Err(invalid(format!("class priors sum to {total}, expected 1")));
        }
        if !(self.sigma_c_sq > T::zero() && self.sigma_c_sq.is_finite()) {
            return Err(invalid("sigma_c_sq must be > 0"));
        }
        if !(self.window_len_s > T::zero() && self.window_len_s.is_finite()) {
            return Err(invalid("window_len_s must be > 0"));
        }
        if !(self.band_lo_hz >= T::zero() && self.band_lo_hz < self.band_hi_hz) {
            return Err(invalid("require 0 <= band_lo_hz < band_hi_hz"));
        }
        Ok(())
    }

    pub fn class(&self, class_id: u32) -> Option<&ActionClassParams<T>> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub(crate) fn class_or_err(&self, class_id: u32) -> Result<&ActionClassParams<T>> {
        self.class(class_id)
            .ok_or_else(|| invalid(format!("unknown class id {class_id}")))
    }

    pub fn static_class(&self) -> &ActionClassParams<T> {
        self.class(STATIC_CLASS).expect("validated model has a static class")
    }

    /// Classes with id != 1, in declaration order.
    pub fn action_classes(&self) -> impl Iterator<Item = &ActionClassParams<T>> {
        self.classes.iter().filter(|c| c.class_id != STATIC_CLASS)
    }

    /// Cast every field to another scalar type.
    pub fn cast<U: Scalar>(&self) -> SensingModelParams<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        SensingModelParams {
            classes: self
                .classes
                .iter()
                .map(|k| ActionClassParams {
                    class_id: k.class_id,
                    name: k.name.clone(),
                    lambda: c(k.lambda),
                    r: c(k.r),
                    sigma_d_sq: c(k.sigma_d_sq),
                    q: c(k.q),
                })
                .collect(),
            sigma_c_sq: c(self.sigma_c_sq),
            window_len_s: c(self.window_len_s),
            band_lo_hz: c(self.band_lo_hz),
            band_hi_hz: c(self.band_hi_hz),
        }
    }
}

/// Default synthetic class table. Values are configuration, ordered so that
/// walking > waving > kicking > ... > static in high-frequency power.
pub fn default_model() -> SensingModelParams<f64> {
    let table: [(u32, &str, f64, f64); 8] = [
        (1, "static", 1.0, 40.0),
        (2, "waving", 4.0, 50.0),
        (3, "kicking", 3.5, 48.0),
        (4, "bending", 3.0, 46.0),
        (5, "raising_hand", 2.5, 45.0),
        (6, "walking", 5.0, 55.0),
        (7, "sitting", 3.2, 47.0),
        (8, "standing_up", 3.0, 46.0),
    ];
    let classes = table
        .iter()
        .map(|&(class_id, name, lambda, r)| ActionClassParams {
            class_id,
            name: name.to_string(),
            lambda,
            r,
            sigma_d_sq: 1e-3,
            q: if class_id == STATIC_CLASS { 0.4 } else { 0.6 / 7.0 },
        })
        .collect();
    SensingModelParams {
        classes,
        sigma_c_sq: 0.15,
        window_len_s: 1.5,
        band_lo_hz: 10.0,
        band_hi_hz: 60.0,
    }
}
