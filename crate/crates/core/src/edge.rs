//! Edge compute allocation: bisection on the budget multiplier and an exact
//! projection oracle.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Scalar;

/// Default bisection tolerance relative to the budget.
pub const DEFAULT_REL_EPS: f64 = 1e-6;
/// Bisection iteration cap.
pub const MAX_ITER: usize = 200;

/// Per-device targets `c_k = f_hat_k - beta_k / rho` and the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AllocationRequest<T> {
    pub targets: Vec<T>,
    pub rho: T,
    pub f_edge_total: T,
    /// Tolerance on `|sum f - f_edge_total|`.
    pub epsilon: T,
}

impl<T: Scalar> AllocationRequest<T> {
    /// Request with the default tolerance `1e-6 * f_edge_total`.
    pub fn new(targets: Vec<T>, rho: T, f_edge_total: T) -> Self {
        Self {
            targets,
            rho,
            f_edge_total,
            epsilon: f_edge_total * T::lit(DEFAULT_REL_EPS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(invalid("allocation request has no devices"));
        }
        if self.targets.iter().any(|c| !c.is_finite()) {
            return Err(invalid("allocation targets must be finite"));
        }
        if !(self.rho > T::zero() && self.rho.is_finite()) {
            return Err(invalid("rho must be > 0"));
        }
        if !(self.f_edge_total > T::zero() && self.f_edge_total.is_finite()) {
            return Err(invalid("f_edge_total must be > 0"));
        }
        if !(self.epsilon > T::zero()) {
            return Err(invalid("epsilon must be > 0"));
        }
        Ok(())
    }

    fn k(&self) -> T {
        T::from_usize_lossy(self.targets.len())
    }

    /// `f_k(mu) = max(c_k - (K / rho) mu, 0)`.
    pub fn response(&self, mu: T) -> Vec<T> {
        let shift = self.k() / self.rho * mu;
        self.targets
            .iter()
            .map(|&c| (c - shift).max(T::zero()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AllocationResult<T> {
    pub f: Vec<T>,
    pub mu_star: T,
    pub kkt_residual: T,
    pub iterations: usize,
}

/// Minimizes `sum (rho/2K)(f_k - c_k)^2` over `f >= 0, sum f <= f_edge_total`.
///
/// With enough budget every device gets `max(c_k, 0)`; otherwise `mu` is
/// bisected on `[0, (rho/K) max c_k]`, then set exactly from the active set.
pub fn allocate<T: Scalar>(req: &AllocationRequest<T>) -> Result<AllocationResult<T>> {
    req.validate()?;
    let total = req.f_edge_total;
    let clipped: T = req.targets.iter().map(|&c| c.max(T::zero())).sum();
    if clipped <= total + req.epsilon {
        let f = req.response(T::zero());
        let kkt_residual = kkt_residual(req, &f, T::zero());
        return Ok(AllocationResult {
            f,
            mu_star: T::zero(),
            kkt_residual,
            iterations: 0,
        });
    }
    let c_max = req.targets.iter().copied().fold(T::zero(), T::max);
    let (mut lo, mut hi) = (T::zero(), req.rho / req.k() * c_max);
    let sum_at = |mu: T| req.response(mu).into_iter().sum::<T>();
    let mut mu = hi;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mid = (lo + hi) / T::lit(2.0);
        let s = sum_at(mid);
        if (s - total).abs() < req.epsilon {
            mu = mid;
            break;
        }
        if s > total {
            lo = mid;
        } else {
            hi = mid;
        }
        mu = hi;
    }
    let mu = polish(req, mu).unwrap_or(mu);
    let f = req.response(mu);
    let kkt_residual = kkt_residual(req, &f, mu);
    Ok(AllocationResult {
        f,
        mu_star: mu,
        kkt_residual,
        iterations,
    })
}

/// Exact multiplier for the active set found at `mu`, if consistent.
fn polish<T: Scalar>(req: &AllocationRequest<T>, mu: T) -> Option<T> {
    let shift = req.k() / req.rho * mu;
    let active: Vec<T> = req.targets.iter().copied().filter(|&c| c > shift).collect();
    if active.is_empty() {
        return None;
    }
    let theta = (active.iter().copied().sum::<T>() - req.f_edge_total) / T::from_usize_lossy(active.len());
    let consistent = theta >= T::zero()
        && req
            .targets
            .iter()
            .all(|&c| (c > shift) == (c > theta) || (c - theta).abs() <= req.epsilon);
    consistent.then(|| theta * req.rho / req.k())
}

/// Largest violation among stationarity, dual feasibility, primal
/// feasibility and complementary slackness, scaled by the problem magnitude.
pub fn kkt_residual<T: Scalar>(req: &AllocationRequest<T>, f: &[T], mu: T) -> T {
    let k = req.k();
    let g = req.rho / k;
    let scale = g * req
        .targets
        .iter()
        .map(|c| c.abs())
        .fold(req.f_edge_total, T::max);
    let mut r = (-mu).max(T::zero());
    for (&fk, &ck) in f.iter().zip(&req.targets) {
        let st = g * (fk - ck) + mu;
        r = r.max((-fk).max(T::zero()) * g);
        r = r.max(if fk > T::zero() { st.abs() } else { (-st).max(T::zero()) });
    }
    let gap = f.iter().copied().sum::<T>() - req.f_edge_total;
    r = r.max(gap.max(T::zero()) * g);
    r = r.max((mu * gap).abs() / req.f_edge_total);
    r / scale.max(T::min_positive_value())
}

/// Euclidean projection of the targets onto `{f >= 0, sum f <= f_edge_total}`
/// by sorting and threshold search.
pub fn projection_oracle<T: Scalar>(req: &AllocationRequest<T>) -> Result<Vec<T>> {
    req.validate()?;
    let clipped: Vec<T> = req.targets.iter().map(|&c| c.max(T::zero())).collect();
    if clipped.iter().copied().sum::<T>() <= req.f_edge_total {
        return Ok(clipped);
    }
    let mut sorted = req.targets.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite targets"));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (j, &c) in sorted.iter().enumerate() {
        cum = cum + c;
        let t = (cum - req.f_edge_total) / T::from_usize_lossy(j + 1);
        if c > t {
            theta = t;
        } else {
            break;
        }
    }
    Ok(req.targets.iter().map(|&c| (c - theta).max(T::zero())).collect())
}
