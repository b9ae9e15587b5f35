//! Least-squares recovery of the sensing model from labeled traces.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{delta_moments, ActionClassParams, SensingModelParams};
use crate::error::{invalid, Error, Result};
use crate::signal::{band_bins, CsiTrace, SegmentSpec, SpectralAnalyzer, WindowSpec, STATIC_CLASS};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitConfig<T> {
    pub window_len_s: T,
    pub band_lo_hz: T,
    pub band_hi_hz: T,
    /// Minimum samples per `(F, tau, class)` cell.
    pub min_samples: usize,
    /// Onset offsets sampled per labeled onset, spread over `[0, tau]`.
    pub offsets_per_onset: usize,
}

impl<T: Scalar> FitConfig<T> {
    pub fn for_model(model: &SensingModelParams<T>) -> Self {
        Self {
            window_len_s: model.window_len_s,
            band_lo_hz: model.band_lo_hz,
            band_hi_hz: model.band_hi_hz,
            min_samples: 30,
            offsets_per_onset: 8,
        }
    }
}

/// Empirical and fitted power-difference moments of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitCell<T> {
    pub f: T,
    pub tau: T,
    pub class_id: u32,
    pub samples: usize,
    pub emp_mean: T,
    pub emp_var: T,
    pub fit_mean: T,
    pub fit_var: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassFitQuality {
    pub class_id: u32,
    pub nmse_mean: f64,
    pub nmse_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitReport<T> {
    /// Fitted parameters. Not validated: degenerate data may give `sigma_c_sq = 0`.
    pub params: SensingModelParams<T>,
    pub cells: Vec<FitCell<T>>,
    pub quality: Vec<ClassFitQuality>,
}

impl<T: Scalar> FitReport<T> {
    pub fn worst_nmse(&self) -> f64 {
        self.quality
            .iter()
            .map(|q| q.nmse_mean.max(q.nmse_var))
            .fold(0.0, f64::max)
    }
}

/// Schedule of `onsets` static-then-action pairs for every action class.
pub fn onset_schedule<T: Scalar>(
    model: &SensingModelParams<T>,
    onsets: usize,
    static_s: f64,
    action_s: f64,
) -> Vec<SegmentSpec> {
    let mut s = Vec::new();
    for _ in 0..onsets {
        for c in model.action_classes() {
            s.push(SegmentSpec::new(STATIC_CLASS, static_s));
            s.push(SegmentSpec::new(c.class_id, action_s));
        }
    }
    s
}

fn same_rate<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9) * a.abs().max(b.abs())
}

fn mean_var<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>();
    (mean, ss / (n - T::one()).max(T::one()))
}

/// Mean of `y` and residual variance after regressing `y` on `x`.
fn mean_and_residual_var<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(y.len());
    let (my, vy) = mean_var(y);
    let mx = x.iter().copied().sum::<T>() / n;
    let sxx = x.iter().map(|&a| (a - mx) * (a - mx)).sum::<T>();
    if !(sxx > T::zero()) || y.len() < 3 {
        return (my, vy);
    }
    let sxy = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum::<T>();
    let slope = sxy / sxx;
    let rss = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let e = b - my - slope * (a - mx);
            e * e
        })
        .sum::<T>();
    (my, rss / (n - T::lit(2.0)))
}

struct Sampler<T: Scalar> {
    fft: SpectralAnalyzer<T>,
    bins: (usize, usize),
    window: usize,
}

impl<T: Scalar> Sampler<T> {
    fn new(cfg: &FitConfig<T>, f: T) -> Result<Self> {
        let spec = WindowSpec::new(cfg.window_len_s, cfg.window_len_s, cfg.band_lo_hz, cfg.band_hi_hz)?;
        spec.validate_for(f)?;
        let window = spec.window_samples(f)?;
        Ok(Self {
            fft: SpectralAnalyzer::new(window)?,
            bins: band_bins(&spec, window, f)?,
            window,
        })
    }

    /// Power of the window ending (exclusive) at `end`.
    fn power(&mut self, trace: &CsiTrace<T>, end: usize) -> Result<T> {
        self.fft.band_power(&trace.primary()[end - self.window..end], self.bins)
    }
}

/// Rate, time step, class, onset offsets and power differences.
type DiffSamples<T> = (T, T, u32, Vec<T>, Vec<T>);

/// Fits `(lambda, r)` per class to window-power means over `1/(T F)`, then
/// `sigma_c_sq` and the per-class `sigma_d_sq` jointly to the
/// power-difference variances over the `(F, tau)` grid.
pub fn fit_model_params<T: Scalar>(
    traces: &[CsiTrace<T>],
    grid: &[(T, T)],
    cfg: &FitConfig<T>,
) -> Result<FitReport<T>> {
    if traces.is_empty() || grid.is_empty() {
        return Err(invalid("fitting needs at least one trace and one grid cell"));
    }
    for t in traces {
        t.validate()?;
    }
    let class_ids: BTreeSet<u32> = traces
        .iter()
        .flat_map(|t| t.labels.iter().map(|l| l.class_id))
        .collect();
    if !class_ids.contains(&STATIC_CLASS) || class_ids.len() < 2 {
        return Err(invalid("labels must cover the static class and at least one action class"));
    }
    let mut rates: Vec<T> = Vec::new();
    for &(f, tau) in grid {
        if !(tau > T::zero() && tau <= cfg.window_len_s) {
            return Err(invalid(format!("grid time step {tau} out of range")));
        }
        if !rates.iter().any(|&r| same_rate(r, f)) {
            rates.push(f);
        }
    }
    if rates.len() < 2 {
        return Err(invalid("fitting needs at least two distinct sampling rates"));
    }
    let at_rate = |f: T| traces.iter().filter(move |t| same_rate(t.sample_rate, f));
    let mut deficient = Vec::new();

    // Window powers per (F, class).
    let mut wp: Vec<(T, u32, T, T)> = Vec::new();
    for &f in &rates {
        let mut sm = Sampler::new(cfg, f)?;
        let stride = (sm.window / 4).max(1);
        for &c in &class_ids {
            let mut xs = Vec::new();
            for t in at_rate(f) {
                for seg in t.labels.iter().filter(|l| l.class_id == c) {
                    let mut end = seg.start + sm.window;
                    while end <= seg.end {
                        xs.push(sm.power(t, end)?);
                        end += stride;
                    }
                }
            }
            if xs.len() < cfg.min_samples {
                deficient.push(format!("F={f} class={c} window-power ({} samples)", xs.len()));
                continue;
            }
            let (m, v) = mean_var(&xs);
            wp.push((f, c, m, v));
        }
    }

    // Power differences per (F, tau, class): (onset offset t, delta).
    let mut dp: Vec<DiffSamples<T>> = Vec::new();
    for &(f, tau) in grid {
        let mut sm = Sampler::new(cfg, f)?;
        let n = sm.window;
        let spec = WindowSpec::new(cfg.window_len_s, tau, cfg.band_lo_hz, cfg.band_hi_hz)?;
        let s = spec.step_samples(f)?;
        for &c in &class_ids {
            let (mut ts, mut ds) = (Vec::new(), Vec::new());
            for t in at_rate(f) {
                for (k, seg) in t.labels.iter().enumerate() {
                    if seg.class_id != c {
                        continue;
                    }
                    if c == STATIC_CLASS {
                        let mut end = seg.start + n + s;
                        while end <= seg.end {
                            ds.push(sm.power(t, end)? - sm.power(t, end - s)?);
                            ts.push(T::zero());
                            end += s;
                        }
                        continue;
                    }
                    let Some(prev) = k.checked_sub(1).map(|p| t.labels[p]) else {
                        continue;
                    };
                    if prev.class_id != STATIC_CLASS || prev.end != seg.start {
                        continue;
                    }
                    let j_max = cfg.offsets_per_onset.max(1);
                    for j in 0..j_max {
                        let off = if j_max == 1 { s / 2 } else { (j * s + (j_max - 1) / 2) / (j_max - 1) };
                        let end = seg.start + off;
                        if end < n + s || end - n - s < prev.start || end > seg.end {
                            continue;
                        }
                        ds.push(sm.power(t, end)? - sm.power(t, end - s)?);
                        ts.push(T::from_usize_lossy(off) / f);
                    }
                }
            }
            if ds.len() < cfg.min_samples {
                deficient.push(format!("F={f} tau={tau} class={c} ({} samples)", ds.len()));
                continue;
            }
            dp.push((f, tau, c, ts, ds));
        }
    }
    if !deficient.is_empty() {
        return Err(Error::Fitting { cells: deficient });
    }

    // (lambda, r) by ordinary least squares of mean on x = 1/(T F).
    let total_samples: usize = traces
        .iter()
        .flat_map(|t| t.labels.iter().map(|l| l.end - l.start))
        .sum();
    let mut classes = Vec::new();
    for &c in &class_ids {
        let pts: Vec<(T, T)> = wp
            .iter()
            .filter(|w| w.1 == c)
            .map(|w| (T::one() / (cfg.window_len_s * w.0), w.2))
            .collect();
        let k = T::from_usize_lossy(pts.len());
        let mx = pts.iter().map(|p| p.0).sum::<T>() / k;
        let my = pts.iter().map(|p| p.1).sum::<T>() / k;
        let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
        let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
        let r = if sxx > T::zero() { sxy / sxx } else { T::zero() };
        let labeled: usize = traces
            .iter()
            .flat_map(|t| t.labels.iter().filter(|l| l.class_id == c).map(|l| l.end - l.start))
            .sum();
        classes.push(ActionClassParams {
            class_id: c,
            name: String::new(),
            lambda: my - r * mx,
            r,
            sigma_d_sq: T::zero(),
            q: T::from_usize_lossy(labeled) / T::from_usize_lossy(total_samples),
        });
    }

    // Window-power estimate of sigma_c_sq, the fallback when the
    // power-difference variances carry no slope information.
    let (mut num, mut den) = (T::zero(), T::zero());
    for &(f, c, _, v) in &wp {
        let p = classes.iter().find(|p| p.class_id == c).expect("class fitted");
        let x = T::one() / (cfg.window_len_s * f);
        let g = T::lit(4.0) * p.lambda * x + T::lit(2.0) * p.r * x * x;
        num = num + g * v;
        den = den + g * g;
    }
    let sigma_c_window = if den > T::zero() { (num / den).max(T::zero()) } else { T::zero() };
    let mut params = SensingModelParams {
        classes,
        sigma_c_sq: T::one(),
        window_len_s: cfg.window_len_s,
        band_lo_hz: cfg.band_lo_hz,
        band_hi_hz: cfg.band_hi_hz,
    };

    // Empirical cell moments; `fit_var` temporarily holds the unit-sigma_c
    // shape g(F, tau) of the variance without deviation.
    let mut cells = Vec::new();
    for (f, tau, c, ts, ds) in &dp {
        let (m, v) = if *c == STATIC_CLASS {
            mean_var(ds)
        } else {
            mean_and_residual_var(ts, ds)
        };
        let d = delta_moments(&params, *c, *f, *tau)?;
        cells.push(FitCell {
            f: *f,
            tau: *tau,
            class_id: *c,
            samples: ds.len(),
            emp_mean: m,
            emp_var: v,
            fit_mean: d.mu_delta,
            fit_var: d.sigma_delta_sq,
        });
    }
    let ids: Vec<u32> = params.classes.iter().map(|c| c.class_id).collect();
    let (sigma_c_sq, deviations) = fit_variances(&cells, &ids, sigma_c_window);
    params.sigma_c_sq = sigma_c_sq;
    for (p, d) in params.classes.iter_mut().zip(&deviations) {
        p.sigma_d_sq = *d;
    }
    for cell in cells.iter_mut() {
        let d = params.class(cell.class_id).expect("class fitted").sigma_d_sq;
        cell.fit_var = sigma_c_sq * cell.fit_var + d;
    }

    let quality = params
        .classes
        .iter()
        .map(|p| {
            let own = cells.iter().filter(|x| x.class_id == p.class_id);
            let (mut e_m, mut n_m, mut e_v, mut n_v) = (0.0, 0.0, 0.0, 0.0);
            for x in own {
                let (em, ev) = (x.emp_mean.to_f64_lossy(), x.emp_var.to_f64_lossy());
                let (fm, fv) = (x.fit_mean.to_f64_lossy(), x.fit_var.to_f64_lossy());
                e_m += (em - fm).powi(2);
                n_m += em * em + ev;
                e_v += (fv - ev).powi(2);
                n_v += ev * ev;
            }
            let ratio = |e: f64, n: f64| if n > 0.0 { e / n } else { 0.0 };
            ClassFitQuality {
                class_id: p.class_id,
                nmse_mean: ratio(e_m, n_m),
                nmse_var: ratio(e_v, n_v),
            }
        })
        .collect();

    params.classes.sort_by_key(|c| c.class_id);
    Ok(FitReport {
        params,
        cells,
        quality,
    })
}

/// Weighted least squares of `emp_var ~ sigma_c_sq * g + sigma_d_sq[class]`
/// with `sigma_d_sq >= 0`; each class is weighted by the inverse of its
/// squared empirical variances so every class counts equally in relative
/// terms. `g` is read from `fit_var`.
fn fit_variances<T: Scalar>(cells: &[FitCell<T>], ids: &[u32], fallback: T) -> (T, Vec<T>) {
    let weight: Vec<T> = ids
        .iter()
        .map(|&c| {
            let s = cells
                .iter()
                .filter(|x| x.class_id == c)
                .map(|x| x.emp_var * x.emp_var)
                .sum::<T>();
            if s > T::zero() { T::one() / s } else { T::zero() }
        })
        .collect();
    let mut free = vec![true; ids.len()];
    let mut sc = fallback;
    for _ in 0..=ids.len() {
        let (mut num, mut den) = (T::zero(), T::zero());
        for (k, &c) in ids.iter().enumerate() {
            let own: Vec<&FitCell<T>> = cells.iter().filter(|x| x.class_id == c).collect();
            if own.is_empty() {
                continue;
            }
            let n = T::from_usize_lossy(own.len());
            let (ge, ee) = if free[k] {
                (
                    own.iter().map(|x| x.fit_var).sum::<T>() / n,
                    own.iter().map(|x| x.emp_var).sum::<T>() / n,
                )
            } else {
                (T::zero(), T::zero())
            };
            for x in own {
                num = num + weight[k] * (x.fit_var - ge) * (x.emp_var - ee);
                den = den + weight[k] * (x.fit_var - ge) * (x.fit_var - ge);
            }
        }
        sc = if den > T::zero() && num > T::zero() { num / den } else { fallback };
        let mut changed = false;
        for (k, &c) in ids.iter().enumerate() {
            if !free[k] {
                continue;
            }
            if class_deviation(cells, c, sc) < T::zero() {
                free[k] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let devs = ids
        .iter()
        .zip(&free)
        .map(|(&c, &f)| if f { class_deviation(cells, c, sc).max(T::zero()) } else { T::zero() })
        .collect();
    (sc, devs)
}

fn class_deviation<T: Scalar>(cells: &[FitCell<T>], c: u32, sc: T) -> T {
    let own: Vec<&FitCell<T>> = cells.iter().filter(|x| x.class_id == c).collect();
    if own.is_empty() {
        return T::zero();
    }
    own.iter().map(|x| x.emp_var - sc * x.fit_var).sum::<T>() / T::from_usize_lossy(own.len())
}
