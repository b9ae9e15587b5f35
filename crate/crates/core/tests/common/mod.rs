#![allow(dead_code)]

use iscc_core::admm::{AdmmConfig, Problem};
use iscc_core::device::{DetectionTable, DeviceMode};
use iscc_core::experiment::{Scheme, SweepAxis};
use iscc_core::perf::{AccuracySurface, DeviceProfile, SystemConfig};
use iscc_core::scenario::{generate_scenario, Scenario, ScenarioParams};

/// Two devices, rates capped at 20 and a model separable at low rates.
pub fn tiny_scenario(seed: u64) -> Scenario {
    let mut p = ScenarioParams {
        devices: 2,
        t_s: 1.0 / 21.0,
        ..ScenarioParams::default()
    };
    p.model.sigma_c_sq = 0.05;
    generate_scenario(&p, seed).unwrap()
}

pub fn problem<'a>(s: &'a Scenario, table: &'a DetectionTable<f64>, mode: DeviceMode<f64>) -> Problem<'a, f64> {
    Problem {
        devices: &s.devices,
        sys: &s.system,
        table,
        surface: &s.surface,
        mode,
    }
}

pub fn cfg() -> AdmmConfig<f64> {
    AdmmConfig::default()
}

pub const SCHEMES: [Scheme; 4] = [
    Scheme::Proposed,
    Scheme::Conventional,
    Scheme::FixedTau(0.3),
    Scheme::FixedTau(0.5),
];

/// Sweep grids used by the trend checks.
pub fn sweep_values(axis: SweepAxis) -> Vec<f64> {
    match axis {
        SweepAxis::EdgeCompute => vec![10e9, 15e9, 20e9, 30e9, 42e9, 60e9, 80e9, 120e9],
        SweepAxis::StaticProb => vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        SweepAxis::PermittedDelay => vec![0.2, 0.3, 0.4, 0.55, 0.7, 0.85, 1.0],
        SweepAxis::DeviceCount => vec![12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 36.0],
    }
}

pub fn alpha(surface: &AccuracySurface<f64>, f: f64, tau: f64) -> f64 {
    match *surface {
        AccuracySurface::Parametric {
            alpha_inf,
            f0,
            kappa,
            window_len_s,
        } => alpha_inf * (1.0 - (-f / f0).exp()) * (1.0 - kappa * tau / window_len_s).max(0.0),
        _ => unreachable!("tests use the parametric surface"),
    }
}

/// Accuracy and minimum edge allocation (cycles/s) of every feasible rate,
/// derived from the raw power, delay and detection formulas.
pub fn oracle_options(
    dev: &DeviceProfile<f64>,
    sys: &SystemConfig<f64>,
    table: &DetectionTable<f64>,
    surface: &AccuracySurface<f64>,
) -> Vec<(u32, f64, f64)> {
    let n = sys.subcarriers as f64;
    let rate: f64 = dev
        .gains
        .iter()
        .map(|g| sys.bandwidth_hz / n * (1.0 + g * dev.p_tx / (n * sys.noise_sigma_sq)).log2())
        .sum();
    let p = 1.0 - dev.priors[0];
    let t = sys.window_len_s;
    let mut out = Vec::new();
    for f in 1..=100_000u32 {
        let ff = f as f64;
        let share = 1.0 - sys.t_s * ff;
        if share <= 0.0 {
            break;
        }
        let room = dev.p_max - dev.e_s * ff - share * dev.p_tx * p;
        if room <= 0.0 {
            continue;
        }
        let v = dev.e_c * t * ff / room;
        let comp = t * ff * sys.c_l / dev.f_local;
        let slack = sys.t_max - n * t * ff * sys.v_l * p / (share * rate);
        if slack <= 0.0 {
            continue;
        }
        let gamma = n * t * ff * sys.c_e * p / slack;
        let Some(u) = table.required_tau(f) else { continue };
        let tau = u.max(v).max(comp);
        if tau > t {
            continue;
        }
        let acc = dev.priors[0] + dev.priors[1..].iter().map(|q| q * alpha(surface, ff, tau)).sum::<f64>();
        out.push((f, acc, gamma));
    }
    out
}

/// Best mean accuracy over all rate pairs within the budget.
pub fn oracle_pair_optimum(s: &Scenario, table: &DetectionTable<f64>) -> f64 {
    let opts: Vec<_> = s
        .devices
        .iter()
        .map(|d| oracle_options(d, &s.system, table, &s.surface))
        .collect();
    let fall = |k: usize| (0u32, s.devices[k].priors[0], 0.0);
    let a: Vec<_> = std::iter::once(fall(0)).chain(opts[0].iter().copied()).collect();
    let b: Vec<_> = std::iter::once(fall(1)).chain(opts[1].iter().copied()).collect();
    let mut best = f64::NEG_INFINITY;
    for x in &a {
        for y in &b {
            if x.2 + y.2 <= s.system.f_edge_total {
                best = best.max((x.1 + y.1) / 2.0);
            }
        }
    }
    best
}

pub fn unconstrained_need(s: &Scenario, table: &DetectionTable<f64>) -> f64 {
    s.devices
        .iter()
        .map(|d| {
            let o = oracle_options(d, &s.system, table, &s.surface);
            let best = o.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            o.iter().find(|x| x.1 == best).map_or(0.0, |x| x.2)
        })
        .sum()
}
