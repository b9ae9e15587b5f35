//! Per-device accuracy maximization by exhaustive search over the integer
//! sampling rate.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::perf::{AccuracySurface, DeviceProfile, LoadModel, SystemConfig};
use crate::stats::{crossing_point, Crossing, SensingModelParams};
use crate::Scalar;

/// Relative width at which the time-step bisection stops.
pub const TAU_REL_TOL: f64 = 1e-9;

/// Crossing points keyed by rate and time-step bits.
type CrossingCache<T> = HashMap<(u32, u64), Option<Crossing<T>>>;

/// Detector requirements shared by every device using one sensing model.
///
/// Memoizes `u(F)` and fixed-step crossing points; both are independent of
/// the ADMM state.
pub struct DetectionTable<T: Scalar> {
    model: SensingModelParams<T>,
    p_min: T,
    u: RwLock<HashMap<u32, Option<T>>>,
    fixed: RwLock<CrossingCache<T>>,
}

impl<T: Scalar> DetectionTable<T> {
    pub fn new(model: SensingModelParams<T>, p_min: T) -> Self {
        Self {
            model,
            p_min,
            u: RwLock::new(HashMap::new()),
            fixed: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &SensingModelParams<T> {
        &self.model
    }

    pub fn p_min(&self) -> T {
        self.p_min
    }

    /// Memoized [`required_tau_detection`].
    pub fn required_tau(&self, f: u32) -> Option<T> {
        if let Some(v) = self.u.read().expect("lock").get(&f) {
            return *v;
        }
        let v = required_tau_detection(&self.model, self.p_min, f);
        self.u.write().expect("lock").insert(f, v);
        v
    }

    /// Crossing point at a pinned time step, `None` if classes are inseparable.
    pub fn crossing_at(&self, f: u32, tau: T) -> Option<Crossing<T>> {
        let key = (f, tau.to_f64_lossy().to_bits());
        if let Some(v) = self.fixed.read().expect("lock").get(&key) {
            return *v;
        }
        let v = crossing_point(&self.model, T::from_u32(f)?, tau).ok();
        self.fixed.write().expect("lock").insert(key, v);
        v
    }
}

/// Smallest step `tau` with `p_c(F, tau) <= p_min`, bisected on
/// `[2/F, T^s]`; `None` when even `tau = T^s` fails.
pub fn required_tau_detection<T: Scalar>(model: &SensingModelParams<T>, p_min: T, f: u32) -> Option<T> {
    if f == 0 {
        return None;
    }
    let fs = T::from_u32(f)?;
    let top = model.window_len_s;
    let mut lo = T::lit(2.0) / fs;
    if lo > top {
        return None;
    }
    let ok = |tau: T| crossing_point(model, fs, tau).map(|c| c.p_c <= p_min).unwrap_or(false);
    if !ok(top) {
        return None;
    }
    if ok(lo) {
        return Some(lo);
    }
    let mut hi = top;
    let tol = top * T::lit(TAU_REL_TOL).max(T::epsilon() * T::lit(4.0));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / T::lit(2.0);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// `tau* = max(u, v, T_comp)`; `None` if any part is infeasible or exceeds `T^s`.
pub fn optimal_tau<T: Scalar>(u: Option<T>, v: Option<T>, t_comp: T, window_len_s: T) -> Option<T> {
    let tau = u?.max(v?).max(t_comp);
    (tau <= window_len_s).then_some(tau)
}

/// `f_hat* = max(f + beta / rho, gamma)`.
pub fn optimal_f_hat<T: Scalar>(f_alloc: T, beta: T, rho: T, gamma: T) -> T {
    (f_alloc + beta / rho).max(gamma)
}

/// How a device picks its time step and what it uploads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tau", rename_all = "snake_case", bound = "T: Scalar")]
pub enum DeviceMode<T> {
    /// Onset detection with the time step optimized.
    Proposed,
    /// Every window is uploaded; no detector, non-overlapping windows.
    Conventional,
    /// Onset detection with the time step pinned.
    FixedTau(T),
}

/// Decision of one device. Resource fields are in the solver's units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecisionPoint<T> {
    /// Sampling rate; 0 when no rate is feasible.
    pub f: u32,
    pub tau: T,
    /// Detector threshold; `None` without a detector or when infeasible.
    pub eta: Option<T>,
    pub f_hat: T,
    /// Accuracy minus the consensus penalty.
    pub objective: T,
    /// Pure accuracy `A_k`.
    pub accuracy: T,
    /// Minimum edge allocation of the chosen rate.
    pub gamma: T,
    pub feasible: bool,
}

/// Feasible operating point at one rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Candidate<T> {
    pub f: u32,
    pub tau: T,
    /// Minimum edge allocation, solver units.
    pub gamma: T,
    pub accuracy: T,
}

/// One device's subproblem with its feasible rates precomputed.
pub struct DeviceSolver<'a, T: Scalar> {
    pub dev: &'a DeviceProfile<T>,
    pub load: LoadModel<T>,
    pub mode: DeviceMode<T>,
    table: &'a DetectionTable<T>,
    /// Cycles/s per solver resource unit.
    unit: T,
    f_max: u32,
    candidates: Vec<Candidate<T>>,
}

impl<'a, T: Scalar> DeviceSolver<'a, T> {
    pub fn new(
        dev: &'a DeviceProfile<T>,
        sys: &SystemConfig<T>,
        table: &'a DetectionTable<T>,
        surface: &AccuracySurface<T>,
        mode: DeviceMode<T>,
        unit: T,
    ) -> Result<Self> {
        let upload = match mode {
            DeviceMode::Conventional => T::one(),
            _ => T::one() - dev.q_static(),
        };
        let load = LoadModel::new(dev, sys, upload)?;
        let f_max = load.f_max();
        let mut s = Self {
            dev,
            load,
            mode,
            table,
            unit,
            f_max,
            candidates: Vec::new(),
        };
        let mut cands = Vec::new();
        for f in 1..=f_max {
            if let Some(c) = s.evaluate(f, surface) {
                cands.push(c);
            }
        }
        s.candidates = cands;
        Ok(s)
    }

    pub fn f_max(&self) -> u32 {
        self.f_max
    }

    pub fn unit(&self) -> T {
        self.unit
    }

    pub fn candidates(&self) -> &[Candidate<T>] {
        &self.candidates
    }

    /// Feasibility and time step at rate `f`, cheapest checks first.
    fn evaluate(&self, f: u32, surface: &AccuracySurface<T>) -> Option<Candidate<T>> {
        let fs = T::from_u32(f)?;
        let top = self.load.window_len_s;
        if !(self.load.comm_share(fs) > T::zero()) {
            return None;
        }
        let v = self.load.required_tau_power(fs)?;
        let comp = self.load.t_computation(fs);
        let gamma = self.load.min_edge_resource(fs)?;
        let tau = match self.mode {
            DeviceMode::Proposed => {
                if v > top || comp > top {
                    return None;
                }
                optimal_tau(self.table.required_tau(f), Some(v), comp, top)?
            }
            DeviceMode::Conventional => {
                if v > top || comp > top {
                    return None;
                }
                top
            }
            DeviceMode::FixedTau(tau) => {
                if v > tau || comp > tau || tau > top || (tau * fs).round() < T::lit(2.0) {
                    return None;
                }
                let c = self.table.crossing_at(f, tau)?;
                if c.p_c > self.table.p_min() {
                    return None;
                }
                tau
            }
        };
        let alpha = surface.eval(fs, tau).ok()?;
        let accuracy = self.dev.priors[0] + self.dev.priors[1..].iter().map(|&q| q * alpha).sum::<T>();
        Some(Candidate {
            f,
            tau,
            gamma: gamma / self.unit,
            accuracy,
        })
    }

    fn decision(&self, c: &Candidate<T>, f_hat: T, objective: T) -> DecisionPoint<T> {
        let eta = match self.mode {
            DeviceMode::Conventional => None,
            _ => T::from_u32(c.f)
                .and_then(|fs| crossing_point(self.table.model(), fs, c.tau).ok())
                .map(|x| x.eta),
        };
        DecisionPoint {
            f: c.f,
            tau: c.tau,
            eta,
            f_hat,
            objective,
            accuracy: c.accuracy,
            gamma: c.gamma,
            feasible: true,
        }
    }

    /// Point used when no rate is feasible: no uploads, accuracy `q_1`.
    pub fn fallback(&self) -> DecisionPoint<T> {
        DecisionPoint {
            f: 0,
            tau: self.load.window_len_s,
            eta: None,
            f_hat: T::zero(),
            objective: self.dev.q_static(),
            accuracy: self.dev.q_static(),
            gamma: T::zero(),
            feasible: false,
        }
    }

    /// Penalized objective of candidate `c` given target `f + beta / rho`.
    pub fn objective(&self, c: &Candidate<T>, f_alloc: T, beta: T, rho: T) -> (T, T) {
        let f_hat = optimal_f_hat(f_alloc, beta, rho, c.gamma);
        let gap = f_alloc - f_hat + beta / rho;
        (c.accuracy - rho / T::lit(2.0) * gap * gap, f_hat)
    }

    /// Maximizes accuracy minus the consensus penalty; ties go to the smaller rate.
    pub fn solve(&self, f_alloc: T, beta: T, rho: T) -> DecisionPoint<T> {
        let mut best: Option<(&Candidate<T>, T, T)> = None;
        for c in &self.candidates {
            let (obj, f_hat) = self.objective(c, f_alloc, beta, rho);
            if best.is_none_or(|b| obj > b.1) {
                best = Some((c, obj, f_hat));
            }
        }
        match best {
            Some((c, obj, f_hat)) => self.decision(c, f_hat, obj),
            None => self.fallback(),
        }
    }

    /// Most accurate rate whose edge requirement fits `budget` (solver units).
    pub fn best_within(&self, budget: T) -> DecisionPoint<T> {
        let mut best: Option<&Candidate<T>> = None;
        for c in self.candidates.iter().filter(|c| c.gamma <= budget) {
            if best.is_none_or(|b| c.accuracy > b.accuracy) {
                best = Some(c);
            }
        }
        match best {
            Some(c) => self.decision(c, c.gamma, c.accuracy),
            None => self.fallback(),
        }
    }

    /// Most accurate rate ignoring the edge budget.
    pub fn unconstrained(&self) -> DecisionPoint<T> {
        self.best_within(T::infinity())
    }
}

/// Convenience wrapper: build the solver and solve once in SI units.
#[allow(clippy::too_many_arguments)]
pub fn solve_device_subproblem<T: Scalar>(
    dev: &DeviceProfile<T>,
    sys: &SystemConfig<T>,
    table: &DetectionTable<T>,
    surface: &AccuracySurface<T>,
    f_alloc: T,
    beta: T,
    rho: T,
) -> Result<DecisionPoint<T>> {
    let s = DeviceSolver::new(dev, sys, table, surface, DeviceMode::Proposed, T::one())?;
    Ok(s.solve(f_alloc, beta, rho))
}
