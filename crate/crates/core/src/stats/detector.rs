use serde::{Deserialize, Serialize};

use super::{delta_moments, DeltaStats, SensingModelParams};
use crate::error::{invalid, Error, Result};
use crate::signal::STATIC_CLASS;
use crate::Scalar;

/// Stopping tolerance on `|p_false - max p_miss|` for the threshold bisection.
pub const CROSSING_TOL: f64 = 1e-9;
/// Iteration cap for the threshold bisection.
pub const CROSSING_MAX_ITER: usize = 100;

/// Upper-tail probability of the standard normal distribution.
pub fn q_function<T: Scalar>(x: T) -> T {
    (x / T::SQRT_2()).erfc() / T::lit(2.0)
}

/// Miss and false-positive rates at a given threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    pub eta: T,
    /// `(class_id, p_miss)` for every action class.
    pub p_miss: Vec<(u32, T)>,
    pub p_false: T,
}

impl<T: Scalar> OperatingPoint<T> {
    pub fn worst_miss(&self) -> T {
        self.p_miss.iter().map(|&(_, p)| p).fold(T::zero(), T::max)
    }
}

/// Threshold at which the false-positive rate meets the worst miss rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing<T> {
    pub eta: T,
    /// Larger of the two rates at `eta`.
    pub p_c: T,
    /// Action class whose miss rate is largest at `eta`.
    pub binding_class: u32,
    pub iterations: usize,
}

fn rate_from<T: Scalar>(mu: T, var: T, eta: T) -> T {
    if var > T::zero() {
        q_function((mu - eta) / var.sqrt())
    } else if mu > eta {
        T::zero()
    } else if mu < eta {
        T::one()
    } else {
        T::lit(0.5)
    }
}

fn check_eta<T: Scalar>(eta: T) -> Result<()> {
    if eta.is_nan() || eta < T::zero() {
        return Err(invalid(format!("threshold {eta} must be >= 0")));
    }
    Ok(())
}

/// Probability that the power difference of action class `class_id` stays at
/// or below `eta`.
pub fn miss_rate<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
    tau: T,
    eta: T,
) -> Result<T> {
    if class_id == STATIC_CLASS {
        return Err(invalid("miss rate is defined for action classes only"));
    }
    check_eta(eta)?;
    let d = delta_moments(model, class_id, f, tau)?;
    Ok(rate_from(d.mu_delta, d.sigma_delta_sq, eta))
}

/// Probability that a static-phase power difference exceeds `eta`.
pub fn false_positive_rate<T: Scalar>(
    model: &SensingModelParams<T>,
    f: T,
    tau: T,
    eta: T,
) -> Result<T> {
    check_eta(eta)?;
    let d = delta_moments(model, STATIC_CLASS, f, tau)?;
    Ok(T::one() - rate_from(T::zero(), d.sigma_delta_sq, eta))
}

/// Rates for every class at threshold `eta`.
pub fn operating_point<T: Scalar>(
    model: &SensingModelParams<T>,
    f: T,
    tau: T,
    eta: T,
) -> Result<OperatingPoint<T>> {
    let p_false = false_positive_rate(model, f, tau, eta)?;
    let p_miss = model
        .action_classes()
        .map(|c| Ok((c.class_id, miss_rate(model, c.class_id, f, tau, eta)?)))
        .collect::<Result<_>>()?;
    Ok(OperatingPoint { eta, p_miss, p_false })
}

/// Pre-evaluated class moments at one `(F, tau)`.
struct RateCurves<T> {
    sigma_static: T,
    actions: Vec<(u32, DeltaStats<T>)>,
}

impl<T: Scalar> RateCurves<T> {
    fn new(model: &SensingModelParams<T>, f: T, tau: T) -> Result<Self> {
        let s = delta_moments(model, STATIC_CLASS, f, tau)?;
        let actions = model
            .action_classes()
            .map(|c| Ok((c.class_id, delta_moments(model, c.class_id, f, tau)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sigma_static: s.sigma(),
            actions,
        })
    }

    fn p_false(&self, eta: T) -> T {
        q_function(eta / self.sigma_static)
    }

    fn worst_miss(&self, eta: T) -> (u32, T) {
        let mut best = (self.actions[0].0, -T::one());
        for &(id, d) in &self.actions {
            let p = rate_from(d.mu_delta, d.sigma_delta_sq, eta);
            if p > best.1 {
                best = (id, p);
            }
        }
        best
    }
}

/// Bisects `g(eta) = p_false(eta) - max_i p_miss_i(eta)` on
/// `[0, min_i mu_delta_i]`.
pub fn crossing_point<T: Scalar>(
    model: &SensingModelParams<T>,
    f: T,
    tau: T,
) -> Result<Crossing<T>> {
    let curves = RateCurves::new(model, f, tau)?;
    let min_mu = curves
        .actions
        .iter()
        .map(|(_, d)| d.mu_delta)
        .fold(T::infinity(), T::min);
    if !(min_mu > T::zero()) {
        return Err(Error::NoCrossing {
            min_mu_delta: min_mu.to_f64_lossy(),
        });
    }
    let tol = T::lit(CROSSING_TOL);
    let (mut lo, mut hi) = (T::zero(), min_mu);
    let mut eta = (lo + hi) / T::lit(2.0);
    let mut iterations = 0;
    while iterations < CROSSING_MAX_ITER {
        iterations += 1;
        eta = (lo + hi) / T::lit(2.0);
        let g = curves.p_false(eta) - curves.worst_miss(eta).1;
        if g.abs() < tol {
            break;
        }
        if g > T::zero() {
            lo = eta;
        } else {
            hi = eta;
        }
    }
    let p_false = curves.p_false(eta);
    let (binding_class, p_miss) = curves.worst_miss(eta);
    Ok(Crossing {
        eta,
        p_c: p_false.max(p_miss),
        binding_class,
        iterations,
    })
}
