//! Schemes and parameter sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{run_admm, AdmmConfig, AdmmRun, Problem};
use crate::device::{DetectionTable, DeviceMode};
use crate::error::{invalid, Error, Result};
use crate::scenario::Scenario;

/// Optimization scheme compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tau", rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    Conventional,
    FixedTau(f64),
}

impl Scheme {
    pub fn mode(self) -> DeviceMode<f64> {
        match self {
            Self::Proposed => DeviceMode::Proposed,
            Self::Conventional => DeviceMode::Conventional,
            Self::FixedTau(t) => DeviceMode::FixedTau(t),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Proposed => write!(f, "proposed"),
            Self::Conventional => write!(f, "conventional"),
            Self::FixedTau(t) => write!(f, "fixed-tau={t}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proposed" => Ok(Self::Proposed),
            "conventional" => Ok(Self::Conventional),
            other => {
                let tau = other
                    .strip_prefix("fixed-tau=")
                    .or_else(|| other.strip_prefix("fixed_tau="))
                    .ok_or_else(|| invalid(format!("unknown scheme {other:?}")))?;
                let t: f64 = tau
                    .parse()
                    .map_err(|_| invalid(format!("bad time step in scheme {other:?}")))?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(invalid(format!("time step must be > 0 in scheme {other:?}")));
                }
                Ok(Self::FixedTau(t))
            }
        }
    }
}

/// Runs one scheme on a scenario. `table` must match the scenario's model
/// and `p_min`; pass `None` to build a fresh one.
pub fn run_scheme(
    scenario: &Scenario,
    scheme: Scheme,
    cfg: &AdmmConfig<f64>,
    table: Option<&DetectionTable<f64>>,
) -> Result<AdmmRun<f64>> {
    scenario.validate()?;
    let owned;
    let table = match table {
        Some(t) => t,
        None => {
            owned = scenario.detection_table();
            &owned
        }
    };
    if table.model() != &scenario.model || table.p_min() != scenario.system.p_min {
        return Err(invalid("detection table does not match the scenario"));
    }
    let problem = Problem {
        devices: &scenario.devices,
        sys: &scenario.system,
        table,
        surface: &scenario.surface,
        mode: scheme.mode(),
    };
    run_admm(&problem, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Total edge compute, cycles/s.
    EdgeCompute,
    /// Static-class prior of every device.
    StaticProb,
    /// Delay budget, s.
    PermittedDelay,
    /// Devices resampled from the base scenario.
    DeviceCount,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EdgeCompute => "edge_compute",
            Self::StaticProb => "static_prob",
            Self::PermittedDelay => "permitted_delay",
            Self::DeviceCount => "device_count",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "edge_compute" => Ok(Self::EdgeCompute),
            "static_prob" => Ok(Self::StaticProb),
            "permitted_delay" => Ok(Self::PermittedDelay),
            "device_count" => Ok(Self::DeviceCount),
            other => Err(invalid(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(invalid("sweep needs at least one value"));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("sweep values must be strictly increasing"));
        }
        if self.schemes.is_empty() {
            return Err(invalid("sweep needs at least one scheme"));
        }
        if self.axis == SweepAxis::DeviceCount
            && self.values.iter().any(|v| !(*v >= 1.0 && v.fract() == 0.0))
        {
            return Err(invalid("device counts must be positive integers"));
        }
        Ok(())
    }

    /// The scenario at one axis value.
    pub fn point(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        match self.axis {
            SweepAxis::EdgeCompute => Ok(base.with_edge_compute(value)),
            SweepAxis::StaticProb => base.with_static_prob(value),
            SweepAxis::PermittedDelay => Ok(base.with_delay(value)),
            SweepAxis::DeviceCount => base.resample_devices(value as usize, base.seed),
        }
    }
}

/// One `(axis value, scheme)` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub scheme: String,
    pub accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs every `(value, scheme)` pair concurrently; rows come back in
/// value-major, scheme-minor order.
pub fn run_sweep(base: &Scenario, sweep: &SweepSpec, cfg: &AdmmConfig<f64>) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    base.validate()?;
    let table = base.detection_table();
    let jobs: Vec<(f64, Scheme)> = sweep
        .values
        .iter()
        .flat_map(|&v| sweep.schemes.iter().map(move |&s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|&(value, scheme)| {
            let sc = sweep.point(base, value)?;
            let run = run_scheme(&sc, scheme, cfg, Some(&table))?;
            Ok(SweepRow {
                axis: value,
                scheme: scheme.to_string(),
                accuracy: run.solution.accuracy,
                iterations: run.solution.iterations,
                converged: run.solution.converged,
            })
        })
        .collect()
}

/// Writes rows as `axis,scheme,accuracy,iterations,converged`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-round primal residuals as `iteration,residual`.
pub fn write_residual_csv<W: Write>(run: &AdmmRun<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "residual"])?;
    for (i, r) in run.state.residual_history.iter().enumerate() {
        w.write_record([(i + 1).to_string(), (r * run.unit).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of one scheme in axis order.
pub fn series<'a>(rows: &'a [SweepRow], scheme: &str) -> Vec<&'a SweepRow> {
    rows.iter().filter(|r| r.scheme == scheme).collect()
}
