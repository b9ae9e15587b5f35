//! Brute-force draws of the two-window power-difference construction.
//!
//! The previous window is `overlap + step_prev`, the current one is
//! `overlap + step_curr`; the overlap cancels. Each step contributes its
//! share `tau/T` of a full-window power draw. For an action window the last
//! `t ~ U[0, tau]` seconds of the current step belong to the action class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{window_power_moments, SensingModelParams};
use crate::error::{invalid, Result};
use crate::signal::STATIC_CLASS;
use crate::Scalar;

struct Gauss {
    mu: f64,
    sd: f64,
}

impl Gauss {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.sd * z
    }
}

/// Sampler for the power difference at fixed `(F, tau)`.
pub struct DeltaSampler {
    w: f64,
    tau: f64,
    p1: Gauss,
    pi: Option<Gauss>,
    d: f64,
}

impl DeltaSampler {
    pub fn new<T: Scalar>(model: &SensingModelParams<T>, class_id: u32, f: T, tau: T) -> Result<Self> {
        if !(tau > T::zero() && tau <= model.window_len_s) {
            return Err(invalid("time step out of range"));
        }
        let (m1, v1) = window_power_moments(model, STATIC_CLASS, f)?;
        let p1 = Gauss {
            mu: m1.to_f64_lossy(),
            sd: v1.to_f64_lossy().sqrt(),
        };
        let pi = if class_id == STATIC_CLASS {
            None
        } else {
            let (m, v) = window_power_moments(model, class_id, f)?;
            Some(Gauss {
                mu: m.to_f64_lossy(),
                sd: v.to_f64_lossy().sqrt(),
            })
        };
        let d = model.class_or_err(class_id)?.sigma_d_sq.to_f64_lossy().sqrt();
        Ok(Self {
            w: model.window_len_s.to_f64_lossy(),
            tau: tau.to_f64_lossy(),
            p1,
            pi,
            d,
        })
    }

    /// Draws one power difference with a uniformly distributed onset offset.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let t = rng.random::<f64>() * self.tau;
        self.draw_at(rng, t)
    }

    /// Draws one power difference with the action occupying the last `t`
    /// seconds of the current step. `t` is ignored for the static class.
    pub fn draw_at<R: Rng>(&self, rng: &mut R, t: f64) -> f64 {
        let dev: f64 = rng.sample::<f64, _>(StandardNormal) * self.d;
        let prev = self.tau / self.w * self.p1.draw(rng);
        let curr = match &self.pi {
            None => self.tau / self.w * self.p1.draw(rng),
            Some(pi) => t / self.w * pi.draw(rng) + (self.tau - t) / self.w * self.p1.draw(rng),
        };
        curr - prev + dev
    }
}

/// Empirical detector rates from independent draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRate {
    pub rate: f64,
    pub draws: usize,
}

impl EmpiricalRate {
    /// Binomial standard error at the measured rate.
    pub fn std_err(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.draws as f64).sqrt()
    }
}

fn count<F: FnMut(&mut ChaCha8Rng) -> bool>(draws: usize, seed: u64, mut hit: F) -> EmpiricalRate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (0..draws).filter(|_| hit(&mut rng)).count();
    EmpiricalRate {
        rate: n as f64 / draws.max(1) as f64,
        draws,
    }
}

/// Fraction of static draws exceeding `eta`.
pub fn empirical_false_positive<T: Scalar>(
    model: &SensingModelParams<T>,
    f: T,
    tau: T,
    eta: T,
    draws: usize,
    seed: u64,
) -> Result<EmpiricalRate> {
    let s = DeltaSampler::new(model, STATIC_CLASS, f, tau)?;
    let eta = eta.to_f64_lossy();
    Ok(count(draws, seed, |rng| s.draw(rng) > eta))
}

/// Fraction of action draws (uniform onset offset) at or below `eta`.
pub fn empirical_miss<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
    tau: T,
    eta: T,
    draws: usize,
    seed: u64,
) -> Result<EmpiricalRate> {
    if class_id == STATIC_CLASS {
        return Err(invalid("miss rate is defined for action classes only"));
    }
    let s = DeltaSampler::new(model, class_id, f, tau)?;
    let eta = eta.to_f64_lossy();
    Ok(count(draws, seed, |rng| s.draw(rng) <= eta))
}

/// Fraction of action draws at a fixed onset offset `t` at or below `eta`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_miss_at<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
    tau: T,
    t: T,
    eta: T,
    draws: usize,
    seed: u64,
) -> Result<EmpiricalRate> {
    if class_id == STATIC_CLASS {
        return Err(invalid("miss rate is defined for action classes only"));
    }
    let s = DeltaSampler::new(model, class_id, f, tau)?;
    let (t, eta) = (t.to_f64_lossy(), eta.to_f64_lossy());
    Ok(count(draws, seed, |rng| s.draw_at(rng, t) <= eta))
}

/// Exact miss rate of the uniform-offset mixture, by midpoint quadrature of
/// the conditional Gaussian rates over `t`.
pub fn mixture_miss_rate<T: Scalar>(
    model: &SensingModelParams<T>,
    class_id: u32,
    f: T,
    tau: T,
    eta: T,
    nodes: usize,
) -> Result<T> {
    let nodes = nodes.max(1);
    let mut acc = T::zero();
    for k in 0..nodes {
        let t = tau * T::lit((k as f64 + 0.5) / nodes as f64);
        let c = super::conditional_delta_moments(model, class_id, f, tau, t)?;
        acc = acc + super::q_function((c.mu_delta - eta) / c.sigma_delta_sq.sqrt());
    }
    Ok(acc / T::from_usize_lossy(nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{default_model, delta_moments, false_positive_rate, q_function};

    #[test]
    fn static_draws_match_closed_form_moments() {
        let m = default_model();
        let s = DeltaSampler::new(&m, 1, 150.0, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.draw(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let d = delta_moments(&m, 1, 150.0, 0.4).unwrap();
        assert!(mean.abs() < 4.0 * (d.sigma_delta_sq / n as f64).sqrt());
        assert!((var / d.sigma_delta_sq - 1.0).abs() < 0.02);
    }

    #[test]
    fn draws_are_seed_deterministic() {
        let m = default_model();
        let a = empirical_miss(&m, 2, 100.0, 0.5, 0.1, 1000, 9).unwrap();
        let b = empirical_miss(&m, 2, 100.0, 0.5, 0.1, 1000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn false_positive_close_to_formula() {
        let m = default_model();
        let eta = 0.05;
        let e = empirical_false_positive(&m, 80.0, 0.5, eta, 200_000, 1).unwrap();
        let p = false_positive_rate(&m, 80.0, 0.5, eta).unwrap();
        assert!((e.rate - p).abs() < 4.0 * e.std_err().max(1e-4));
    }

    #[test]
    fn fixed_offset_miss_matches_conditional_gaussian() {
        let m = default_model();
        let (f, tau, t, eta) = (100.0, 0.6, 0.35, 0.3);
        let e = empirical_miss_at(&m, 5, f, tau, t, eta, 200_000, 2).unwrap();
        let c = crate::stats::conditional_delta_moments(&m, 5, f, tau, t).unwrap();
        let p = q_function((c.mu_delta - eta) / c.sigma());
        assert!((e.rate - p).abs() < 4.0 * e.std_err().max(1e-4));
    }

    #[test]
    fn uniform_offset_miss_matches_mixture() {
        let m = default_model();
        let (f, tau, eta) = (100.0, 0.6, 0.3);
        let e = empirical_miss(&m, 5, f, tau, eta, 200_000, 4).unwrap();
        let p = mixture_miss_rate(&m, 5, f, tau, eta, 2000).unwrap();
        assert!((e.rate - p).abs() < 4.0 * e.std_err().max(1e-4));
    }
}
