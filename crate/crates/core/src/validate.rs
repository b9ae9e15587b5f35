//! Oracle and Monte-Carlo validation suites with pass/fail reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::{allocate, kkt_residual, projection_oracle, AllocationRequest};
use crate::error::{invalid, Error, Result};
use crate::signal::{detect_onsets, generate_csi_trace, SegmentSpec, SpectralAnalyzer, WindowSpec, STATIC_CLASS};
use crate::stats::fit::onset_schedule;
use crate::stats::sampling::{empirical_false_positive, empirical_miss, mixture_miss_rate};
use crate::stats::{crossing_point, default_model, false_positive_rate, fit_model_params, miss_rate, FitConfig};

/// Absolute tolerance on Monte-Carlo detection rates.
pub const PROP1_TOL: f64 = 0.005;
/// Slack allowed when checking that the crossing point never increases in the time step.
pub const THM1_TOL: f64 = 1e-9;
/// Relative tolerance against the projection oracle.
pub const THM2_ORACLE_TOL: f64 = 1e-6;
/// Bound on the normalized KKT residual.
pub const THM2_KKT_TOL: f64 = 1e-8;
/// Bound on the normalized mean-squared fitting error.
pub const FIT_NMSE_TOL: f64 = 0.1;
/// Relative tolerance on energy conservation.
pub const PARSEVAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Prop1,
    Thm1,
    Thm2,
    Fit,
    Parseval,
}

impl Target {
    pub const ALL: [Target; 5] = [Self::Prop1, Self::Thm1, Self::Thm2, Self::Fit, Self::Parseval];
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Prop1 => "prop1",
            Self::Thm1 => "thm1",
            Self::Thm2 => "thm2",
            Self::Fit => "fit",
            Self::Parseval => "parseval",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string() == s.trim())
            .ok_or_else(|| invalid(format!("unknown validation target {s:?}")))
    }
}

/// Work budget of a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Draws per Monte-Carlo point.
    pub mc_samples: usize,
    pub allocation_requests: usize,
    pub random_windows: usize,
    /// Onsets per action class in each fitting trace.
    pub fit_onsets: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            mc_samples: 1_000_000,
            allocation_requests: 1000,
            random_windows: 10_000,
            fit_onsets: 300,
            seed: 0,
        }
    }
}

/// One measured quantity against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub target: Target,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub elapsed_s: f64,
}

impl ValidationReport {
    fn new(target: Target, checks: Vec<Check>, start: Instant) -> Self {
        Self {
            target,
            passed: checks.iter().all(|c| c.passed),
            checks,
            elapsed_s: start.elapsed().as_secs_f64(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} ({} checks, {:.2} s)\n",
            self.target,
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.elapsed_s
        );
        for c in &self.checks {
            s += &format!(
                "  [{}] {}: {:.3e} (tol {:.1e})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            );
        }
        s
    }
}

pub fn validate(target: Target, budget: &Budget) -> Result<ValidationReport> {
    let start = Instant::now();
    let checks = match target {
        Target::Prop1 => prop1(budget)?,
        Target::Thm1 => thm1()?,
        Target::Thm2 => thm2(budget)?,
        Target::Fit => fit(budget)?,
        Target::Parseval => parseval(budget)?,
    };
    Ok(ValidationReport::new(target, checks, start))
}

/// A `(F, tau, eta, class)` point of the detection grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop1Point {
    pub f: f64,
    pub tau: f64,
    pub eta: f64,
    pub class_id: u32,
}

/// Twelve points spanning rates, steps, thresholds around the crossing and
/// every action class.
pub fn prop1_points() -> Result<Vec<Prop1Point>> {
    let m = default_model();
    let cells = [(50.0, 0.3), (100.0, 0.5), (150.0, 0.8), (250.0, 1.2)];
    let scales = [0.8, 1.0, 1.2];
    let mut out = Vec::new();
    for (i, &(f, tau)) in cells.iter().enumerate() {
        let eta_c = crossing_point(&m, f, tau)?.eta;
        for (j, &s) in scales.iter().enumerate() {
            let class_id = 2 + ((i * scales.len() + j) % 7) as u32;
            out.push(Prop1Point {
                f,
                tau,
                eta: eta_c * s,
                class_id,
            });
        }
    }
    Ok(out)
}

fn prop1(budget: &Budget) -> Result<Vec<Check>> {
    let m = default_model();
    let pts = prop1_points()?;
    let rows: Vec<Result<[Check; 3]>> = pts
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let seed = budget.seed.wrapping_add(2 * k as u64);
            let fp = empirical_false_positive(&m, p.f, p.tau, p.eta, budget.mc_samples, seed)?;
            let miss = empirical_miss(&m, p.class_id, p.f, p.tau, p.eta, budget.mc_samples, seed + 1)?;
            let fp_cf = false_positive_rate(&m, p.f, p.tau, p.eta)?;
            let miss_cf = miss_rate(&m, p.class_id, p.f, p.tau, p.eta)?;
            let miss_mix = mixture_miss_rate(&m, p.class_id, p.f, p.tau, p.eta, 2000)?;
            let tag = format!("F={} tau={} eta={:.4} class={}", p.f, p.tau, p.eta, p.class_id);
            Ok([
                Check::at_most(format!("false positive, {tag}"), (fp.rate - fp_cf).abs(), PROP1_TOL),
                Check::at_most(format!("miss vs closed form, {tag}"), (miss.rate - miss_cf).abs(), PROP1_TOL),
                Check::at_most(format!("miss vs offset mixture, {tag}"), (miss.rate - miss_mix).abs(), PROP1_TOL),
            ])
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Rates and steps of the monotonicity grid.
pub fn thm1_grid() -> (Vec<f64>, Vec<f64>) {
    let rates = (0..20).map(|i| 20.0 + 20.0 * i as f64).collect();
    let taus = (0..20).map(|j| 0.05 + (1.5 - 0.05) * j as f64 / 19.0).collect();
    (rates, taus)
}

fn thm1() -> Result<Vec<Check>> {
    let m = default_model();
    let (rates, taus) = thm1_grid();
    let mut worst = f64::NEG_INFINITY;
    for &f in &rates {
        let pc: Vec<f64> = taus
            .iter()
            .map(|&t| crossing_point(&m, f, t).map(|c| c.p_c))
            .collect::<Result<_>>()?;
        for w in pc.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    Ok(vec![Check::at_most(
        "largest increase of the crossing point along tau (20x20 grid)",
        worst,
        THM1_TOL,
    )])
}

/// Random allocation request with `K` in `2..=64`, about half with a binding budget.
pub fn random_request<R: Rng>(rng: &mut R) -> AllocationRequest<f64> {
    let k = rng.random_range(2..=64);
    let scale = 10f64.powf(rng.random_range(-2.0..10.0));
    let targets: Vec<f64> = (0..k).map(|_| scale * rng.random_range(-0.2..1.5)).collect();
    let positive: f64 = targets.iter().map(|c| c.max(0.0)).sum();
    let total = (positive * rng.random_range(0.1..1.3)).max(scale * 1e-3);
    AllocationRequest::new(targets, rng.random_range(0.1..10.0), total)
}

fn thm2(budget: &Budget) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut dev = 0.0f64;
    let mut kkt = 0.0f64;
    for _ in 0..budget.allocation_requests {
        let req = random_request(&mut rng);
        let got = allocate(&req)?;
        let want = projection_oracle(&req)?;
        let scale = req
            .targets
            .iter()
            .fold(req.f_edge_total, |a, c| a.max(c.abs()));
        for (a, b) in got.f.iter().zip(&want) {
            dev = dev.max((a - b).abs() / scale);
        }
        kkt = kkt.max(kkt_residual(&req, &got.f, got.mu_star));
    }
    Ok(vec![
        Check::at_most("max relative deviation from projection oracle", dev, THM2_ORACLE_TOL),
        Check::at_most("max KKT residual", kkt, THM2_KKT_TOL),
    ])
}

/// Rates and steps used for the fitting check.
pub const FIT_RATES: [f64; 3] = [150.0, 200.0, 300.0];
pub const FIT_TAUS: [f64; 5] = [0.2, 0.3, 0.4, 0.5, 0.6];

fn fit(budget: &Budget) -> Result<Vec<Check>> {
    let truth = default_model();
    let sched = onset_schedule(&truth, budget.fit_onsets, 2.5, 2.0);
    let traces = FIT_RATES
        .par_iter()
        .enumerate()
        .map(|(k, &f)| generate_csi_trace(&truth, &sched, f, budget.seed.wrapping_add(100 + k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(f64, f64)> = FIT_RATES
        .iter()
        .flat_map(|&f| FIT_TAUS.iter().map(move |&t| (f, t)))
        .collect();
    let rep = fit_model_params(&traces, &grid, &FitConfig::for_model(&truth))?;
    let mut out = Vec::new();
    for q in &rep.quality {
        out.push(Check::at_most(format!("class {} mean NMSE", q.class_id), q.nmse_mean, FIT_NMSE_TOL));
        out.push(Check::at_most(format!("class {} variance NMSE", q.class_id), q.nmse_var, FIT_NMSE_TOL));
    }
    Ok(out)
}

fn parseval(budget: &Budget) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut worst = 0.0f64;
    let mut mismatched = 0usize;
    for _ in 0..budget.random_windows {
        let n = rng.random_range(2..=512);
        let h: Vec<Complex<f64>> = (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut fft = SpectralAnalyzer::new(n)?;
        let time: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        let first: Vec<Complex<f64>> = fft.spectrum(&h)?.to_vec();
        let freq: f64 = first.iter().map(|c| c.norm_sqr()).sum();
        worst = worst.max((time - freq).abs() / time.max(f64::MIN_POSITIVE));
        let mut again = SpectralAnalyzer::new(n)?;
        if again.spectrum(&h)? != first.as_slice() {
            mismatched += 1;
        }
    }
    let m = default_model();
    let sched: Vec<SegmentSpec> = onset_schedule(&m, 3, 3.0, 2.0)
        .into_iter()
        .chain([SegmentSpec::new(STATIC_CLASS, 3.0)])
        .collect();
    let trace = generate_csi_trace(&m, &sched, 200.0, budget.seed)?;
    let spec = WindowSpec::new(1.5, 0.25, 10.0, 60.0)?;
    let eta = crossing_point(&m, 200.0, 0.25)?.eta;
    let a = detect_onsets(&trace, &spec, eta)?;
    let b = detect_onsets(&trace, &spec, eta)?;
    let detector_mismatch = if a == b { 0.0 } else { 1.0 };
    Ok(vec![
        Check::at_most("max relative energy error over random windows", worst, PARSEVAL_TOL),
        Check::at_most("windows whose spectrum differs between runs", mismatched as f64, 0.0),
        Check::at_most("detector runs differing on the same trace", detector_mismatch, 0.0),
    ])
}
