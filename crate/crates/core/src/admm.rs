//! Distributed coordination of device subproblems and edge allocation by ADMM.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{DecisionPoint, DetectionTable, DeviceMode, DeviceSolver};
use crate::edge::{allocate, AllocationRequest};
use crate::error::{invalid, Error, Result};
use crate::perf::{AccuracySurface, DeviceProfile, LoadModel, SystemConfig};
use crate::Scalar;

/// Relative tolerance of the edge bisection inside ADMM rounds.
const EDGE_REL_EPS: f64 = 1e-12;

/// Relative slack of the final feasibility re-check.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Solver knobs. Resources are measured in units of `f_edge_total / K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdmmConfig<T> {
    pub rho: T,
    /// Primal tolerance relative to `f_edge_total`.
    pub eps_rel: T,
    pub i_max: usize,
}

impl<T: Scalar> Default for AdmmConfig<T> {
    fn default() -> Self {
        Self {
            rho: T::one(),
            eps_rel: T::lit(1e-3),
            i_max: 200,
        }
    }
}

impl<T: Scalar> AdmmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero() && self.rho.is_finite()) {
            return Err(invalid("rho must be > 0"));
        }
        if !(self.eps_rel > T::zero()) {
            return Err(invalid("epsilon must be > 0"));
        }
        if self.i_max == 0 {
            return Err(invalid("i_max must be >= 1"));
        }
        Ok(())
    }
}

/// Everything the optimizer reads; shared read-only by all devices.
#[derive(Clone, Copy)]
pub struct Problem<'a, T: Scalar> {
    pub devices: &'a [DeviceProfile<T>],
    pub sys: &'a SystemConfig<T>,
    pub table: &'a DetectionTable<T>,
    pub surface: &'a AccuracySurface<T>,
    pub mode: DeviceMode<T>,
}

impl<T: Scalar> Problem<'_, T> {
    /// Collects every offending field instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if let Err(e) = self.sys.validate() {
            errs.push(format!("system: {e}"));
        }
        if self.devices.len() != self.sys.k {
            errs.push(format!("device count {} != k {}", self.devices.len(), self.sys.k));
        }
        for d in self.devices {
            if let Err(e) = d.validate() {
                errs.push(format!("device {}: {e}", d.id));
            }
            if d.priors.len() != self.table.model().classes.len() {
                errs.push(format!(
                    "device {}: {} priors for {} classes",
                    d.id,
                    d.priors.len(),
                    self.table.model().classes.len()
                ));
            }
        }
        if let Err(e) = self.surface.validate() {
            errs.push(format!("accuracy surface: {e}"));
        }
        if let DeviceMode::FixedTau(tau) = self.mode {
            if !(tau > T::zero() && tau <= self.sys.window_len_s) {
                errs.push(format!("fixed time step {tau} outside (0, T]"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    fn solvers(&self, unit: T) -> Result<Vec<DeviceSolver<'_, T>>> {
        self.devices
            .par_iter()
            .map(|d| DeviceSolver::new(d, self.sys, self.table, self.surface, self.mode, unit))
            .collect()
    }
}

/// Iterate of the consensus problem, in normalized resource units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdmmState<T> {
    pub beta: Vec<T>,
    pub f: Vec<T>,
    pub f_hat: Vec<T>,
    pub rho: T,
    pub iter: usize,
    /// `max_k |f_k - f_hat_k|` per round.
    pub residual_history: Vec<T>,
    /// `rho max_k |f_k - f_k_prev|` per round.
    pub dual_history: Vec<T>,
}

/// Values exchanged in one round plus the device-private context that
/// produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RoundRecord<T> {
    pub round: usize,
    pub beta_before: Vec<T>,
    pub f_hat: Vec<T>,
    /// Device to edge: `f_hat_k - beta_k / rho`.
    pub request: Vec<T>,
    /// Edge to device: allocation `f_k`.
    pub grant: Vec<T>,
    pub beta_after: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Request,
    Grant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Message<T> {
    pub round: usize,
    pub device: usize,
    pub kind: MessageKind,
    pub value: T,
}

/// Final decisions in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Solution<T> {
    pub decisions: Vec<DecisionPoint<T>>,
    /// Edge allocation per device, cycles/s.
    pub allocations: Vec<T>,
    pub accuracy: T,
    pub converged: bool,
    pub iterations: usize,
}

/// Full run artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdmmRun<T> {
    pub solution: Solution<T>,
    pub state: AdmmState<T>,
    /// Cycles/s per normalized resource unit.
    pub unit: T,
    pub rounds: Vec<RoundRecord<T>>,
    /// Leftover offers made after the rounds, solver units.
    pub leftover_offers: Vec<T>,
}

impl<T: Scalar> AdmmRun<T> {
    pub fn transcript(&self) -> Vec<Message<T>> {
        message_log(&self.rounds)
    }
}

/// Device and edge messages of every round, requests first.
pub fn message_log<T: Scalar>(rounds: &[RoundRecord<T>]) -> Vec<Message<T>> {
    let mut out = Vec::with_capacity(rounds.len() * 2 * rounds.first().map_or(0, |r| r.request.len()));
    for r in rounds {
        for (k, &v) in r.request.iter().enumerate() {
            out.push(Message { round: r.round, device: k, kind: MessageKind::Request, value: v });
        }
        for (k, &v) in r.grant.iter().enumerate() {
            out.push(Message { round: r.round, device: k, kind: MessageKind::Grant, value: v });
        }
    }
    out
}

/// Re-runs the edge side on logged requests; returns the last grants, or
/// an error naming the first grant that differs.
pub fn replay_transcript<T: Scalar>(messages: &[Message<T>], rho: T, k: usize) -> Result<Vec<T>> {
    let total = T::from_usize_lossy(k);
    let mut last = Vec::new();
    let rounds = messages.iter().map(|m| m.round).max().map_or(0, |r| r + 1);
    for round in 0..rounds {
        let of = |kind| {
            let mut v = vec![T::nan(); k];
            for m in messages.iter().filter(|m| m.round == round && m.kind == kind) {
                v[m.device] = m.value;
            }
            v
        };
        let (requests, grants) = (of(MessageKind::Request), of(MessageKind::Grant));
        let got = allocate(&edge_request(requests, rho, total))?.f;
        if let Some(d) = (0..k).find(|&d| !bits_eq(got[d], grants[d])) {
            return Err(Error::Validation(vec![format!("round {round} device {d}: grant mismatch")]));
        }
        last = got;
    }
    Ok(last)
}

fn bits_eq<T: Scalar>(a: T, b: T) -> bool {
    a.to_f64_lossy().to_bits() == b.to_f64_lossy().to_bits()
}

fn edge_request<T: Scalar>(targets: Vec<T>, rho: T, total: T) -> AllocationRequest<T> {
    AllocationRequest {
        targets,
        rho,
        f_edge_total: total,
        epsilon: total * T::lit(EDGE_REL_EPS).max(T::epsilon() * T::lit(16.0)),
    }
}

/// Runs the consensus loop from a warm start in which every device requests
/// the edge share of its unpenalized optimum.
pub fn run_admm<T: Scalar>(problem: &Problem<'_, T>, cfg: &AdmmConfig<T>) -> Result<AdmmRun<T>> {
    problem.validate()?;
    cfg.validate()?;
    let k = problem.devices.len();
    let kt = T::from_usize_lossy(k);
    let unit = problem.sys.f_edge_total / kt;
    let eps = cfg.eps_rel * kt;
    let rho = cfg.rho;
    let solvers = problem.solvers(unit)?;

    let warm: Vec<T> = solvers.par_iter().map(|s| s.unconstrained().gamma).collect();
    let f0 = allocate(&edge_request(warm.clone(), rho, kt))?.f;
    let mut rounds = vec![RoundRecord {
        round: 0,
        beta_before: vec![T::zero(); k],
        f_hat: warm.clone(),
        request: warm.clone(),
        grant: f0.clone(),
        beta_after: vec![T::zero(); k],
    }];
    let mut state = AdmmState {
        beta: vec![T::zero(); k],
        f: f0,
        f_hat: warm,
        rho,
        iter: 0,
        residual_history: Vec::new(),
        dual_history: Vec::new(),
    };
    let mut decisions: Vec<DecisionPoint<T>> = Vec::new();
    let mut converged = false;
    while state.iter < cfg.i_max {
        state.iter += 1;
        decisions = solvers
            .par_iter()
            .zip(state.f.par_iter().zip(state.beta.par_iter()))
            .map(|(s, (&f, &b))| s.solve(f, b, rho))
            .collect();
        let f_hat: Vec<T> = decisions.iter().map(|d| d.f_hat).collect();
        let request: Vec<T> = f_hat.iter().zip(&state.beta).map(|(&h, &b)| h - b / rho).collect();
        let grant = allocate(&edge_request(request.clone(), rho, kt))?.f;
        let beta_before = state.beta.clone();
        let mut residual = T::zero();
        let mut dual = T::zero();
        for d in 0..k {
            dual = dual.max(rho * (grant[d] - state.f[d]).abs());
            let gap = grant[d] - f_hat[d];
            residual = residual.max(gap.abs());
            state.beta[d] = state.beta[d] + rho * gap;
        }
        rounds.push(RoundRecord {
            round: state.iter,
            beta_before,
            f_hat: f_hat.clone(),
            request,
            grant: grant.clone(),
            beta_after: state.beta.clone(),
        });
        state.f = grant;
        state.f_hat = f_hat;
        state.residual_history.push(residual);
        state.dual_history.push(dual);
        if residual <= eps && dual <= eps {
            converged = true;
            break;
        }
    }

    let grants = if converged {
        state.f.clone()
    } else {
        allocate(&edge_request(state.f_hat.clone(), rho, kt))?.f
    };
    let (mut decisions, mut alloc) = finalize(&solvers, decisions, grants, kt);
    let offers = spend_leftover(&solvers, &mut decisions, &mut alloc, kt);
    let accuracy = decisions.iter().map(|d| d.accuracy).sum::<T>() / kt;
    let decisions = decisions
        .into_iter()
        .map(|d| DecisionPoint {
            f_hat: d.f_hat * unit,
            gamma: d.gamma * unit,
            ..d
        })
        .collect();
    let solution = Solution {
        decisions,
        allocations: alloc.into_iter().map(|f| f * unit).collect(),
        accuracy,
        converged,
        iterations: state.iter,
    };
    let bad = constraint_violations(problem, &solution, T::lit(FEASIBILITY_TOL));
    if !bad.is_empty() {
        return Err(Error::Infeasible(bad.join("; ")));
    }
    Ok(AdmmRun {
        solution,
        state,
        unit,
        rounds,
        leftover_offers: offers,
    })
}

/// Makes the decisions feasible for the true budget `total`.
///
/// Kept as is when every grant covers its device's requirement. Otherwise
/// requirements are met exactly if they fit, with the leftover split evenly.
/// If they do not fit, devices are admitted in decreasing order of accuracy
/// gain per unit of requirement; a device that no longer fits takes its best
/// rate within what is left.
fn finalize<T: Scalar>(
    solvers: &[DeviceSolver<'_, T>],
    decisions: Vec<DecisionPoint<T>>,
    grants: Vec<T>,
    total: T,
) -> (Vec<DecisionPoint<T>>, Vec<T>) {
    let k = T::from_usize_lossy(solvers.len());
    if decisions.iter().zip(&grants).all(|(d, &g)| d.gamma <= g) {
        return (decisions, grants);
    }
    let need: T = decisions.iter().map(|d| d.gamma).sum();
    if need <= total {
        let share = (total - need) / k;
        let alloc = decisions.iter().map(|d| d.gamma + share).collect();
        return (decisions, alloc);
    }
    let gain = |i: usize| {
        let d = &decisions[i];
        let q1 = solvers[i].dev.q_static();
        if d.gamma > T::zero() {
            (d.accuracy - q1) / d.gamma
        } else {
            T::infinity()
        }
    };
    let mut order: Vec<usize> = (0..solvers.len()).collect();
    order.sort_by(|&a, &b| gain(b).partial_cmp(&gain(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut left = total;
    let mut out = decisions.clone();
    for &i in &order {
        if decisions[i].gamma > left {
            out[i] = solvers[i].best_within(left);
        }
        left = (left - out[i].gamma).max(T::zero());
    }
    let share = left / k;
    let alloc = out.iter().map(|d| d.gamma + share).collect();
    (out, alloc)
}

/// Offers each device, in index order, its requirement plus the unused
/// budget; a device switches only to a strictly more accurate rate.
///
/// Returns the offers made, in solver units.
fn spend_leftover<T: Scalar>(
    solvers: &[DeviceSolver<'_, T>],
    decisions: &mut [DecisionPoint<T>],
    alloc: &mut Vec<T>,
    total: T,
) -> Vec<T> {
    let k = T::from_usize_lossy(solvers.len());
    let mut left = (total - decisions.iter().map(|d| d.gamma).sum::<T>()).max(T::zero());
    let mut offers = Vec::with_capacity(solvers.len());
    for (s, d) in solvers.iter().zip(decisions.iter_mut()) {
        let offer = d.gamma + left;
        offers.push(offer);
        let alt = s.best_within(offer);
        if alt.accuracy > d.accuracy {
            left = (left - (alt.gamma - d.gamma)).max(T::zero());
            *d = alt;
        }
    }
    if alloc.iter().zip(decisions.iter()).any(|(&a, d)| d.gamma > a) {
        let need: T = decisions.iter().map(|d| d.gamma).sum();
        let share = (total - need).max(T::zero()) / k;
        *alloc = decisions.iter().map(|d| d.gamma + share).collect();
    }
    offers
}

/// Every power, delay, detection and budget constraint a solution breaks,
/// each allowed a relative slack `tol`.
pub fn constraint_violations<T: Scalar>(problem: &Problem<'_, T>, sol: &Solution<T>, tol: T) -> Vec<String> {
    let mut out = Vec::new();
    let sys = problem.sys;
    let one = T::one() + tol;
    let used: T = sol.allocations.iter().copied().sum();
    if used > sys.f_edge_total * one {
        out.push(format!("allocations sum to {used} > {}", sys.f_edge_total));
    }
    for (k, ((dev, d), &alloc)) in problem.devices.iter().zip(&sol.decisions).zip(&sol.allocations).enumerate() {
        if d.f == 0 {
            continue;
        }
        let upload = match problem.mode {
            DeviceMode::Conventional => T::one(),
            _ => T::one() - dev.q_static(),
        };
        let load = match LoadModel::new(dev, sys, upload) {
            Ok(l) => l,
            Err(e) => {
                out.push(format!("device {k}: {e}"));
                continue;
            }
        };
        let f = T::from_u32(d.f).unwrap_or_else(T::zero);
        match load.power(f, d.tau) {
            Ok(p) if p.overall <= dev.p_max * one => {}
            Ok(p) => out.push(format!("device {k}: power {} > {}", p.overall, dev.p_max)),
            Err(e) => out.push(format!("device {k}: {e}")),
        }
        match load.delays(f, alloc) {
            Ok(t) => {
                if t.computation > d.tau * one {
                    out.push(format!("device {k}: computation delay {} > time step {}", t.computation, d.tau));
                }
                if t.offload() > sys.t_max * one {
                    out.push(format!("device {k}: offload delay {} > {}", t.offload(), sys.t_max));
                }
            }
            Err(e) => out.push(format!("device {k}: {e}")),
        }
        if d.tau > sys.window_len_s * one {
            out.push(format!("device {k}: time step {} > window", d.tau));
        }
        if !matches!(problem.mode, DeviceMode::Conventional) {
            match problem.table.crossing_at(d.f, d.tau) {
                Some(c) if c.p_c <= problem.table.p_min() * one => {}
                Some(c) => out.push(format!("device {k}: detection error {} > {}", c.p_c, problem.table.p_min())),
                None => out.push(format!("device {k}: detector undefined at F = {}", d.f)),
            }
        }
    }
    out
}

/// Exhaustive joint search for small instances: best mean accuracy over
/// all rate tuples whose edge requirements fit the budget.
pub fn centralized_optimum<T: Scalar>(problem: &Problem<'_, T>) -> Result<T> {
    problem.validate()?;
    let solvers = problem.solvers(T::one())?;
    let total = problem.sys.f_edge_total;
    let k = T::from_usize_lossy(solvers.len());
    fn rec<T: Scalar>(solvers: &[DeviceSolver<'_, T>], left: T) -> T {
        let Some((s, rest)) = solvers.split_first() else {
            return T::zero();
        };
        let mut best = s.fallback().accuracy + rec(rest, left);
        for c in s.candidates().iter().filter(|c| c.gamma <= left) {
            best = best.max(c.accuracy + rec(rest, left - c.gamma));
        }
        best
    }
    Ok(rec(&solvers, total) / k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Scenario, ScenarioParams};

    fn scenario() -> Scenario {
        generate_scenario(&ScenarioParams::default(), 0).unwrap()
    }

    fn with_solvers<R>(s: &Scenario, f: impl FnOnce(&[DeviceSolver<'_, f64>]) -> R) -> R {
        let table = s.detection_table();
        let p = Problem {
            devices: &s.devices,
            sys: &s.system,
            table: &table,
            surface: &s.surface,
            mode: DeviceMode::Proposed,
        };
        let solvers = p.solvers(s.system.f_edge_total / s.devices.len() as f64).unwrap();
        f(&solvers)
    }

    #[test]
    fn finalize_keeps_covered_grants() {
        with_solvers(&scenario(), |solvers| {
            let d: Vec<_> = solvers.iter().map(|s| s.best_within(0.5)).collect();
            let grants = vec![0.5; solvers.len()];
            let (out, alloc) = finalize(solvers, d.clone(), grants.clone(), 12.0);
            assert_eq!(out, d);
            assert_eq!(alloc, grants);
        });
    }

    #[test]
    fn finalize_fits_an_overdrawn_budget() {
        with_solvers(&scenario(), |solvers| {
            let d: Vec<_> = solvers.iter().map(|s| s.unconstrained()).collect();
            let total = 0.5 * d.iter().map(|x| x.gamma).sum::<f64>();
            let (out, alloc) = finalize(solvers, d, vec![0.0; solvers.len()], total);
            assert!(out.iter().map(|x| x.gamma).sum::<f64>() <= total);
            assert!(alloc.iter().sum::<f64>() <= total * (1.0 + 1e-12));
            assert!(out.iter().zip(&alloc).all(|(x, a)| x.gamma <= *a));
            assert!(out.iter().any(|x| x.f > 0));
        });
    }

    #[test]
    fn leftover_pass_never_lowers_accuracy() {
        with_solvers(&scenario(), |solvers| {
            let mut d: Vec<_> = solvers.iter().map(|s| s.best_within(0.6)).collect();
            let before: Vec<f64> = d.iter().map(|x| x.accuracy).collect();
            let mut alloc = vec![0.6; solvers.len()];
            let offers = spend_leftover(solvers, &mut d, &mut alloc, 12.0);
            assert_eq!(offers.len(), solvers.len());
            assert!(d.iter().zip(&before).all(|(x, b)| x.accuracy >= *b));
            assert!(d.iter().zip(&before).any(|(x, b)| x.accuracy > *b));
            assert!(d.iter().map(|x| x.gamma).sum::<f64>() <= 12.0);
            assert!(d.iter().zip(&alloc).all(|(x, a)| x.gamma <= *a));
        });
    }

    #[test]
    fn edge_requests_use_relative_tolerance() {
        let r = edge_request(vec![1.0, 2.0], 1.0, 4.0);
        assert_eq!(r.epsilon, 4.0 * EDGE_REL_EPS);
    }
}
