use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{band_bins, CsiTrace, LabelSegment, WindowSpec};
use crate::error::{invalid, Result};
use crate::stats::SensingModelParams;
use crate::Scalar;

/// One schedule entry: `duration_s` seconds of class `class_id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub class_id: u32,
    pub duration_s: f64,
}

impl SegmentSpec {
    pub fn new(class_id: u32, duration_s: f64) -> Self {
        Self {
            class_id,
            duration_s,
        }
    }
}

const TONES: usize = 4;

/// Per-class generator constants for one `(model, F)` pair.
///
/// A window of `n` samples holds in-band tones of total power `tone_power`
/// on DFT bins plus white complex noise of variance `noise_var`; with `b`
/// band bins the window power has mean `A + b v / n` and variance
/// `2 A v / n + b v^2 / n^2`, which are matched to the model moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSynthesis {
    pub class_id: u32,
    pub tone_power: f64,
    pub noise_var: f64,
    pub window: usize,
    pub band: (usize, usize),
}

impl ClassSynthesis {
    pub fn solve<T: Scalar>(model: &SensingModelParams<T>, class_id: u32, f: f64) -> Result<Self> {
        let c = model.class_or_err(class_id)?;
        let spec = WindowSpec::new(
            model.window_len_s.to_f64_lossy(),
            model.window_len_s.to_f64_lossy(),
            model.band_lo_hz.to_f64_lossy(),
            model.band_hi_hz.to_f64_lossy(),
        )?;
        spec.validate_for(f)?;
        let window = spec.window_samples(f)?;
        let band = band_bins(&spec, window, f)?;
        let b = (band.1 - band.0 + 1) as f64;
        let n = window as f64;
        let lambda = c.lambda.to_f64_lossy();
        let r = c.r.to_f64_lossy();
        let sc = model.sigma_c_sq.to_f64_lossy();
        let half = lambda * n + r;
        let disc = half * half - 2.0 * b * sc * (2.0 * lambda * n + r);
        if disc < 0.0 {
            return Err(invalid(format!(
                "class {class_id}: window-power moments not reachable at F = {f} (sigma_c_sq too large for lambda, r)"
            )));
        }
        let noise_var = if half > 0.0 { (half - disc.sqrt()) / b } else { 0.0 };
        let tone_power = lambda + (r - b * noise_var) / n;
        if tone_power < -1e-12 * (1.0 + lambda) {
            return Err(invalid(format!(
                "class {class_id}: window-power moments not reachable at F = {f} (r too small for the band width)"
            )));
        }
        Ok(Self {
            class_id,
            tone_power: tone_power.max(0.0),
            noise_var,
            window,
            band,
        })
    }

    fn tone_bins(&self) -> [usize; TONES] {
        let (lo, hi) = self.band;
        let width = hi - lo + 1;
        std::array::from_fn(|j| lo + ((j + 1) * width / (TONES + 1) + self.class_id as usize) % width)
    }
}

/// Synthesizes a single-subcarrier CSI trace following `schedule`.
///
/// Windows lying inside one class segment have window-power mean and
/// variance equal to the model moments. Instance deviation is not modeled.
pub fn generate_csi_trace<T: Scalar>(
    model: &SensingModelParams<T>,
    schedule: &[SegmentSpec],
    f: T,
    seed: u64,
) -> Result<CsiTrace<T>> {
    model.validate()?;
    if schedule.is_empty() {
        return Err(invalid("schedule is empty"));
    }
    let fs = f.to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Complex<T>> = Vec::new();
    let mut labels = Vec::with_capacity(schedule.len());
    for seg in schedule {
        if !(seg.duration_s > 0.0 && seg.duration_s.is_finite()) {
            return Err(invalid("segment durations must be > 0"));
        }
        let syn = ClassSynthesis::solve(model, seg.class_id, fs)?;
        let len = (seg.duration_s * fs).round() as usize;
        if len == 0 {
            return Err(invalid("segment shorter than one sample"));
        }
        let start = samples.len();
        let n = syn.window as f64;
        let amp = (syn.tone_power / TONES as f64).sqrt();
        let tones: Vec<(f64, f64)> = syn
            .tone_bins()
            .iter()
            .map(|&k| (k as f64, rng.random::<f64>() * std::f64::consts::TAU))
            .collect();
        let sd = (syn.noise_var / 2.0).sqrt();
        let dc = if syn.band.0 > 0 { 1.0 } else { 0.0 };
        for m in start..start + len {
            let mut re = dc;
            let mut im = 0.0;
            for &(k, phi) in &tones {
                let a = std::f64::consts::TAU * k * m as f64 / n + phi;
                re += amp * a.cos();
                im += amp * a.sin();
            }
            let zr: f64 = rng.sample(StandardNormal);
            let zi: f64 = rng.sample(StandardNormal);
            samples.push(Complex::new(T::lit(re + sd * zr), T::lit(im + sd * zi)));
        }
        labels.push(LabelSegment {
            start,
            end: start + len,
            class_id: seg.class_id,
        });
    }
    CsiTrace::new(vec![samples], f, labels)
}
