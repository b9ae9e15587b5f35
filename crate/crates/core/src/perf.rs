//! Power, delay, data-rate and accuracy models of one device.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// Radio, energy, compute and prior parameters of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DeviceProfile<T> {
    pub id: usize,
    /// Energy per sensing transmission, J.
    pub e_s: T,
    /// Energy per processed element, J.
    pub e_c: T,
    /// Local compute, cycles/s.
    pub f_local: T,
    /// Power budget, W.
    pub p_max: T,
    /// Transmit power, W.
    pub p_tx: T,
    /// Linear channel power gains `|H_n|^2` of the allocated subcarriers.
    pub gains: Vec<T>,
    pub distance_m: T,
    /// Class priors; `priors[0]` is the static class.
    pub priors: Vec<T>,
}

impl<T: Scalar> DeviceProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: T, name: &str| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("device {}: {name} must be > 0", self.id)))
            }
        };
        pos(self.e_s, "e_s")?;
        pos(self.e_c, "e_c")?;
        pos(self.f_local, "f_local")?;
        pos(self.p_max, "p_max")?;
        pos(self.p_tx, "p_tx")?;
        if self.gains.is_empty() {
            return Err(invalid(format!("device {}: empty subcarrier set", self.id)));
        }
        if self.gains.iter().any(|g| !(*g >= T::zero() && g.is_finite())) {
            return Err(invalid(format!("device {}: gains must be finite and >= 0", self.id)));
        }
        if self.priors.len() < 2 || self.priors.iter().any(|q| !(*q >= T::zero() && *q <= T::one())) {
            return Err(invalid(format!("device {}: priors must lie in [0, 1]", self.id)));
        }
        let s: T = self.priors.iter().copied().sum();
        if (s - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
            return Err(invalid(format!("device {}: priors sum to {s}", self.id)));
        }
        Ok(())
    }

    pub fn q_static(&self) -> T {
        self.priors[0]
    }
}

/// System-wide constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SystemConfig<T> {
    /// Resource-block bandwidth, Hz.
    pub bandwidth_hz: T,
    /// Subcarriers per resource block.
    pub subcarriers: usize,
    /// Noise power per subcarrier, W.
    pub noise_sigma_sq: T,
    /// Airtime per sensing transmission, s.
    pub t_s: T,
    /// Local FFT cycles per element.
    pub c_l: T,
    /// Edge CNN cycles per element.
    pub c_e: T,
    /// Bits per element.
    pub v_l: T,
    /// Delay budget, s.
    pub t_max: T,
    /// Edge compute, cycles/s.
    pub f_edge_total: T,
    pub p_min: T,
    pub k: usize,
    /// Analysis window, s.
    pub window_len_s: T,
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: T, name: &str| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("system: {name} must be > 0")))
            }
        };
        pos(self.bandwidth_hz, "bandwidth_hz")?;
        pos(self.noise_sigma_sq, "noise_sigma_sq")?;
        pos(self.t_s, "t_s")?;
        pos(self.c_l, "c_l")?;
        pos(self.c_e, "c_e")?;
        pos(self.v_l, "v_l")?;
        pos(self.t_max, "t_max")?;
        pos(self.f_edge_total, "f_edge_total")?;
        pos(self.window_len_s, "window_len_s")?;
        if self.subcarriers == 0 {
            return Err(invalid("system: subcarriers must be >= 1"));
        }
        if !(self.p_min > T::zero() && self.p_min < T::lit(0.5)) {
            return Err(invalid("system: p_min must lie in (0, 0.5)"));
        }
        if self.k == 0 {
            return Err(invalid("system: device count must be >= 1"));
        }
        Ok(())
    }
}

/// Recognizer accuracy as a function of sampling rate and time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum AccuracySurface<T> {
    /// `alpha_inf (1 - exp(-F/f0)) max(0, 1 - kappa tau / window_len_s)`.
    Parametric {
        alpha_inf: T,
        f0: T,
        kappa: T,
        window_len_s: T,
    },
    /// Bilinear interpolation on a rectangular grid; `values[i][j]` is at
    /// `(rates[i], taus[j])`.
    Table {
        rates: Vec<T>,
        taus: Vec<T>,
        values: Vec<Vec<T>>,
    },
}

impl<T: Scalar> AccuracySurface<T> {
    pub fn parametric(alpha_inf: T, f0: T, kappa: T, window_len_s: T) -> Result<Self> {
        let s = Self::Parametric {
            alpha_inf,
            f0,
            kappa,
            window_len_s,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn table(rates: Vec<T>, taus: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        let s = Self::Table { rates, taus, values };
        s.validate()?;
        Ok(s)
    }

    /// Checks parameters, grid shape, range and monotonicity on a probe grid.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Parametric {
                alpha_inf,
                f0,
                kappa,
                window_len_s,
            } => {
                if !(*alpha_inf >= T::zero() && *alpha_inf <= T::one()) {
                    return Err(invalid("alpha_inf must lie in [0, 1]"));
                }
                if !(*f0 > T::zero() && *kappa >= T::zero() && *window_len_s > T::zero()) {
                    return Err(invalid("require f0 > 0, kappa >= 0, window_len_s > 0"));
                }
            }
            Self::Table { rates, taus, values } => {
                let increasing = |v: &[T]| v.windows(2).all(|w| w[0] < w[1]);
                if rates.len() < 2 || taus.len() < 2 || !increasing(rates) || !increasing(taus) {
                    return Err(invalid("table axes need >= 2 strictly increasing points"));
                }
                if values.len() != rates.len() || values.iter().any(|r| r.len() != taus.len()) {
                    return Err(invalid("table values do not match axes"));
                }
                for (i, row) in values.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if !(v >= T::zero() && v <= T::one()) {
                            return Err(invalid("table values must lie in [0, 1]"));
                        }
                        if i > 0 && v < values[i - 1][j] {
                            return Err(invalid("table accuracy must be nondecreasing in F"));
                        }
                        if j > 0 && v > row[j - 1] {
                            return Err(invalid("table accuracy must be nonincreasing in tau"));
                        }
                    }
                }
            }
        }
        self.check_monotone()
    }

    fn probe_domain(&self) -> (T, T, T, T) {
        match self {
            Self::Parametric { f0, window_len_s, .. } => {
                (T::one(), *f0 * T::lit(40.0), *window_len_s / T::lit(100.0), *window_len_s)
            }
            Self::Table { rates, taus, .. } => (rates[0], rates[rates.len() - 1], taus[0], taus[taus.len() - 1]),
        }
    }

    fn check_monotone(&self) -> Result<()> {
        let (f_lo, f_hi, t_lo, t_hi) = self.probe_domain();
        let n = 24;
        let at = |lo: T, hi: T, k: usize| {
            if k == n {
                hi
            } else {
                lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n)
            }
        };
        let slack = T::epsilon() * T::lit(8.0);
        for a in 0..=n {
            for b in 0..=n {
                let (f, t) = (at(f_lo, f_hi, a), at(t_lo, t_hi, b));
                let v = self.eval(f, t)?;
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(invalid(format!("accuracy {v} at F={f}, tau={t} outside [0, 1]")));
                }
                if a > 0 && v + slack < self.eval(at(f_lo, f_hi, a - 1), t)? {
                    return Err(invalid(format!("accuracy decreases in F near F={f}, tau={t}")));
                }
                if b > 0 && v > self.eval(f, at(t_lo, t_hi, b - 1))? + slack {
                    return Err(invalid(format!("accuracy increases in tau near F={f}, tau={t}")));
                }
            }
        }
        Ok(())
    }

    /// Accuracy at `(F, tau)`.
    pub fn eval(&self, f: T, tau: T) -> Result<T> {
        match self {
            Self::Parametric {
                alpha_inf,
                f0,
                kappa,
                window_len_s,
            } => {
                if !(f > T::zero() && tau > T::zero() && tau <= *window_len_s) {
                    return Err(Error::Domain(format!("F={f}, tau={tau}")));
                }
                let rise = T::one() - (-f / *f0).exp();
                let decay = (T::one() - *kappa * tau / *window_len_s).max(T::zero());
                Ok(*alpha_inf * rise * decay)
            }
            Self::Table { rates, taus, values } => {
                let (i, wf) = locate(rates, f).ok_or_else(|| Error::Domain(format!("F={f} outside table")))?;
                let (j, wt) = locate(taus, tau).ok_or_else(|| Error::Domain(format!("tau={tau} outside table")))?;
                let one = T::one();
                let v = values[i][j] * (one - wf) * (one - wt)
                    + values[i + 1][j] * wf * (one - wt)
                    + values[i][j + 1] * (one - wf) * wt
                    + values[i + 1][j + 1] * wf * wt;
                Ok(v.max(T::zero()).min(T::one()))
            }
        }
    }
}

/// Cell index and fractional position of `x` on a strictly increasing axis.
fn locate<T: Scalar>(axis: &[T], x: T) -> Option<(usize, T)> {
    let last = axis.len() - 1;
    if !(x >= axis[0] && x <= axis[last]) {
        return None;
    }
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1).min(last - 1);
    Some((i, (x - axis[i]) / (axis[i + 1] - axis[i])))
}

/// `R = (B/N) sum_n log2(1 + |H_n|^2 P_tx / (N sigma^2))`.
pub fn data_rate<T: Scalar>(dev: &DeviceProfile<T>, sys: &SystemConfig<T>) -> Result<T> {
    if dev.gains.is_empty() {
        return Err(invalid(format!("device {}: empty subcarrier set", dev.id)));
    }
    let n = T::from_usize_lossy(sys.subcarriers);
    let per = sys.bandwidth_hz / n;
    let snr_scale = dev.p_tx / (n * sys.noise_sigma_sq);
    Ok(dev
        .gains
        .iter()
        .map(|&g| per * (T::one() + g * snr_scale).log2())
        .sum())
}

/// Power terms in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown<T> {
    pub sensing: T,
    pub computation: T,
    pub transmission: T,
    pub overall: T,
}

/// Delay terms in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown<T> {
    pub computation: T,
    pub transmission: T,
    pub recognition: T,
}

impl<T: Scalar> DelayBreakdown<T> {
    /// Delay counted against the budget: local FFT runs within the time step.
    pub fn offload(&self) -> T {
        self.transmission + self.recognition
    }
}

/// Per-device load model with the link rate precomputed.
///
/// `upload_prob` is the probability that a window is forwarded: `1 - q_1`
/// with onset detection, `1` when every window is uploaded.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadModel<T> {
    pub e_s: T,
    pub e_c: T,
    pub f_local: T,
    pub p_max: T,
    pub p_tx: T,
    pub rate: T,
    pub upload_prob: T,
    pub t_s: T,
    pub c_l: T,
    pub c_e: T,
    pub v_l: T,
    pub t_max: T,
    pub window_len_s: T,
    pub subcarriers: T,
}

impl<T: Scalar> LoadModel<T> {
    pub fn new(dev: &DeviceProfile<T>, sys: &SystemConfig<T>, upload_prob: T) -> Result<Self> {
        Ok(Self {
            e_s: dev.e_s,
            e_c: dev.e_c,
            f_local: dev.f_local,
            p_max: dev.p_max,
            p_tx: dev.p_tx,
            rate: data_rate(dev, sys)?,
            upload_prob,
            t_s: sys.t_s,
            c_l: sys.c_l,
            c_e: sys.c_e,
            v_l: sys.v_l,
            t_max: sys.t_max,
            window_len_s: sys.window_len_s,
            subcarriers: T::from_usize_lossy(sys.subcarriers),
        })
    }

    /// Detection-gated load: windows are uploaded with probability `1 - q_1`.
    pub fn detecting(dev: &DeviceProfile<T>, sys: &SystemConfig<T>) -> Result<Self> {
        Self::new(dev, sys, T::one() - dev.q_static())
    }

    /// `1 - t_s F`, the airtime share left for communication.
    pub fn comm_share(&self, f: T) -> T {
        T::one() - self.t_s * f
    }

    fn check_duty(&self, f: T) -> Result<()> {
        if !(self.comm_share(f) > T::zero()) {
            return Err(Error::InfeasibleSensingDuty {
                duty: (self.t_s * f).to_f64_lossy(),
            });
        }
        Ok(())
    }

    pub fn p_sensing(&self, f: T) -> T {
        self.e_s * f
    }

    pub fn p_computation(&self, f: T, tau: T) -> T {
        self.e_c * self.window_len_s * f / tau
    }

    pub fn p_transmission(&self, f: T) -> T {
        self.comm_share(f) * self.p_tx * self.upload_prob
    }

    pub fn power(&self, f: T, tau: T) -> Result<PowerBreakdown<T>> {
        self.check_duty(f)?;
        if !(tau > T::zero()) {
            return Err(invalid("time step must be > 0"));
        }
        let sensing = self.p_sensing(f);
        let computation = self.p_computation(f, tau);
        let transmission = self.p_transmission(f);
        Ok(PowerBreakdown {
            sensing,
            computation,
            transmission,
            overall: sensing + computation + transmission,
        })
    }

    /// Elements per window per subcarrier block: `N T F`.
    fn elements(&self, f: T) -> T {
        self.subcarriers * self.window_len_s * f
    }

    pub fn t_computation(&self, f: T) -> T {
        self.window_len_s * f * self.c_l / self.f_local
    }

    pub fn t_transmission(&self, f: T) -> T {
        self.elements(f) * self.v_l * self.upload_prob / (self.comm_share(f) * self.rate)
    }

    pub fn t_recognition(&self, f: T, f_edge: T) -> T {
        self.elements(f) * self.c_e * self.upload_prob / f_edge
    }

    pub fn delays(&self, f: T, f_edge: T) -> Result<DelayBreakdown<T>> {
        self.check_duty(f)?;
        if !(self.rate > T::zero()) {
            return Err(Error::Infeasible("nonpositive effective data rate".into()));
        }
        if !(f_edge > T::zero()) {
            return Err(invalid("edge allocation must be > 0"));
        }
        Ok(DelayBreakdown {
            computation: self.t_computation(f),
            transmission: self.t_transmission(f),
            recognition: self.t_recognition(f, f_edge),
        })
    }

    /// Smallest time step meeting the power budget, `None` if the budget is
    /// exhausted before computation.
    pub fn required_tau_power(&self, f: T) -> Option<T> {
        let room = self.p_max - self.p_transmission(f) - self.p_sensing(f);
        (room > T::zero()).then(|| self.e_c * self.window_len_s * f / room)
    }

    /// Smallest edge allocation meeting the delay budget, `None` when the
    /// transmission delay alone uses it up.
    pub fn min_edge_resource(&self, f: T) -> Option<T> {
        if !(self.comm_share(f) > T::zero()) {
            return None;
        }
        let slack = self.t_max - self.t_transmission(f);
        (slack > T::zero()).then(|| self.elements(f) * self.c_e * self.upload_prob / slack)
    }

    /// Largest integer rate whose transmission delay fits the budget.
    pub fn f_max(&self) -> u32 {
        let per = self.subcarriers * self.window_len_s * self.v_l * self.upload_prob / (self.t_max * self.rate);
        let bound = (T::one() / (self.t_s + per)).floor();
        bound.to_u32().unwrap_or(0)
    }
}

pub fn power_overall<T: Scalar>(
    dev: &DeviceProfile<T>,
    sys: &SystemConfig<T>,
    f: T,
    tau: T,
) -> Result<PowerBreakdown<T>> {
    LoadModel::detecting(dev, sys)?.power(f, tau)
}

pub fn delay_components<T: Scalar>(
    dev: &DeviceProfile<T>,
    sys: &SystemConfig<T>,
    f: T,
    f_edge_alloc: T,
) -> Result<DelayBreakdown<T>> {
    LoadModel::detecting(dev, sys)?.delays(f, f_edge_alloc)
}

/// `A = q_1 + sum_{i >= 2} q_i alpha(F, tau)`.
pub fn device_accuracy<T: Scalar>(
    dev: &DeviceProfile<T>,
    surface: &AccuracySurface<T>,
    f: T,
    tau: T,
) -> Result<T> {
    let a = surface.eval(f, tau)?;
    Ok(dev.priors[0] + dev.priors[1..].iter().map(|&q| q * a).sum::<T>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sys() -> SystemConfig<f64> {
        SystemConfig {
            bandwidth_hz: 4e6,
            subcarriers: 10,
            noise_sigma_sq: 1e-15,
            t_s: 1e-4,
            c_l: 2e4,
            c_e: 2e6,
            v_l: 64.0,
            t_max: 0.55,
            f_edge_total: 42e9,
            p_min: 0.02,
            k: 12,
            window_len_s: 1.5,
        }
    }

    fn dev() -> DeviceProfile<f64> {
        let mut priors = vec![0.4];
        priors.extend(std::iter::repeat_n(0.6 / 7.0, 7));
        DeviceProfile {
            id: 0,
            e_s: 2e-3,
            e_c: 1e-4,
            f_local: 40e6,
            p_max: 0.5,
            p_tx: 0.251,
            gains: vec![1e-11; 10],
            distance_m: 250.0,
            priors,
        }
    }

    fn surface() -> AccuracySurface<f64> {
        AccuracySurface::parametric(0.95, 25.0, 0.15, 1.5).unwrap()
    }

    #[test]
    fn unit_snr_rate() {
        let mut s = sys();
        s.bandwidth_hz = 1e6;
        s.subcarriers = 1;
        s.noise_sigma_sq = 1.0;
        let mut d = dev();
        d.p_tx = 1.0;
        d.gains = vec![1.0];
        assert_relative_eq!(data_rate(&d, &s).unwrap(), 1e6, max_relative = 1e-12);
    }

    #[test]
    fn doubling_gain_adds_one_bit_per_subcarrier() {
        let s = sys();
        let mut d = dev();
        d.gains = vec![1e-8; 10];
        let r1 = data_rate(&d, &s).unwrap();
        d.gains = vec![2e-8; 10];
        let r2 = data_rate(&d, &s).unwrap();
        assert_relative_eq!(r2 - r1, 4e5 * 10.0, max_relative = 0.01);
    }

    #[test]
    fn rate_matches_direct_evaluation() {
        let s = sys();
        let mut d = dev();
        d.gains = vec![3e-12, 7e-11, 1.2e-10, 5e-13];
        let direct: f64 = d
            .gains
            .iter()
            .map(|g| 4e6 / 10.0 * (1.0 + g * 0.251 / (10.0 * 1e-15)).ln() / std::f64::consts::LN_2)
            .sum();
        assert_relative_eq!(data_rate(&d, &s).unwrap(), direct, max_relative = 1e-9);
    }

    #[test]
    fn empty_subcarrier_set_rejected() {
        let mut d = dev();
        d.gains.clear();
        assert!(data_rate(&d, &sys()).is_err());
    }

    #[test]
    fn all_static_device_never_transmits() {
        let mut d = dev();
        d.priors = vec![1.0, 0.0];
        let p = power_overall(&d, &sys(), 100.0, 0.5).unwrap();
        assert_eq!(p.transmission, 0.0);
        let t = delay_components(&d, &sys(), 100.0, 1e9).unwrap();
        assert_eq!(t.transmission, 0.0);
        assert_eq!(t.recognition, 0.0);
    }

    #[test]
    fn power_hand_examples() {
        let mut d = dev();
        d.e_s = 1e-3;
        assert_relative_eq!(power_overall(&d, &sys(), 1.0, 0.5).unwrap().sensing, 1e-3);
        d.e_c = 1e-7;
        let p = power_overall(&d, &sys(), 200.0, 0.5).unwrap();
        assert_relative_eq!(p.computation, 6e-5, max_relative = 1e-12);
    }

    #[test]
    fn duty_cycle_violation() {
        assert!(matches!(
            power_overall(&dev(), &sys(), 1e4, 0.5),
            Err(Error::InfeasibleSensingDuty { .. })
        ));
    }

    #[test]
    fn transmission_delay_hand_example() {
        let mut s = sys();
        s.t_s = 1e-12;
        let load = LoadModel {
            rate: 1e6,
            ..LoadModel::detecting(&dev(), &s).unwrap()
        };
        assert_relative_eq!(load.t_transmission(100.0), 0.0576, max_relative = 1e-9);
    }

    #[test]
    fn recognition_delay_halves_with_double_allocation() {
        let a = delay_components(&dev(), &sys(), 120.0, 1e9).unwrap();
        let b = delay_components(&dev(), &sys(), 120.0, 2e9).unwrap();
        assert_eq!(a.recognition, 2.0 * b.recognition);
    }

    #[test]
    fn accuracy_examples() {
        let d = dev();
        let one = AccuracySurface::table(vec![1.0, 1e3], vec![0.01, 1.5], vec![vec![1.0; 2]; 2]).unwrap();
        assert_relative_eq!(device_accuracy(&d, &one, 50.0, 0.3).unwrap(), 1.0, max_relative = 1e-12);
        let zero = AccuracySurface::table(vec![1.0, 1e3], vec![0.01, 1.5], vec![vec![0.0; 2]; 2]).unwrap();
        assert_eq!(device_accuracy(&d, &zero, 50.0, 0.3).unwrap(), 0.4);
        let nine = AccuracySurface::table(vec![1.0, 1e3], vec![0.01, 1.5], vec![vec![0.9; 2]; 2]).unwrap();
        assert_relative_eq!(device_accuracy(&d, &nine, 50.0, 0.3).unwrap(), 0.94, max_relative = 1e-12);
    }

    #[test]
    fn table_interpolates_and_rejects_extrapolation() {
        let t = AccuracySurface::table(
            vec![10.0, 20.0],
            vec![0.1, 0.5],
            vec![vec![0.5, 0.3], vec![0.9, 0.7]],
        )
        .unwrap();
        assert_relative_eq!(t.eval(15.0, 0.3).unwrap(), 0.6, max_relative = 1e-12);
        assert_relative_eq!(t.eval(20.0, 0.5).unwrap(), 0.7, max_relative = 1e-12);
        assert!(matches!(t.eval(25.0, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn non_monotone_table_rejected() {
        let r = AccuracySurface::table(
            vec![10.0, 20.0],
            vec![0.1, 0.5],
            vec![vec![0.9, 0.3], vec![0.5, 0.7]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn parametric_domain() {
        assert!(surface().eval(50.0, 1.6).is_err());
        assert!(surface().eval(0.0, 0.5).is_err());
    }

    #[test]
    fn f_max_limits() {
        let mut s = sys();
        s.v_l = 1e-30;
        assert_eq!(LoadModel::detecting(&dev(), &s).unwrap().f_max(), 10_000);
        let mut d = dev();
        d.priors = vec![1.0, 0.0];
        assert_eq!(LoadModel::detecting(&d, &sys()).unwrap().f_max(), 10_000);
        let mut s = sys();
        s.t_s = 1e-3;
        let mut load = LoadModel::detecting(&dev(), &s).unwrap();
        // second term = N T V_L (1 - q1) / (T_max R) = 1e-3
        load.rate = 10.0 * 1.5 * 64.0 * 0.6 / (0.55 * 1e-3);
        assert_eq!(load.f_max(), 500);
    }

    #[test]
    fn power_tau_requirement_hand_example() {
        let load = LoadModel::detecting(&dev(), &sys()).unwrap();
        let f = 80.0;
        let other = load.p_transmission(f) + load.p_sensing(f);
        let load = LoadModel {
            p_max: other + 2.0 * load.e_c * 1.5 * f / 1.5,
            ..load
        };
        assert_relative_eq!(load.required_tau_power(f).unwrap(), 0.75, max_relative = 1e-12);
        let starved = LoadModel { p_max: other * 0.5, ..load.clone() };
        assert!(starved.required_tau_power(f).is_none());
    }

    #[test]
    fn edge_requirement_zero_for_static_device() {
        let mut d = dev();
        d.priors = vec![1.0, 0.0];
        assert_eq!(LoadModel::detecting(&d, &sys()).unwrap().min_edge_resource(100.0), Some(0.0));
    }

    proptest! {
        #[test]
        fn power_monotone(f in 1.0f64..5000.0, tau in 0.01f64..1.5) {
            let load = LoadModel::detecting(&dev(), &sys()).unwrap();
            let a = load.power(f, tau).unwrap();
            let b = load.power(f + 1.0, tau).unwrap();
            prop_assert!(b.overall > a.overall);
            let c = load.power(f, tau * 1.01).unwrap();
            prop_assert!(c.computation < a.computation);
        }

        #[test]
        fn delays_increase_in_rate(f in 1.0f64..5000.0) {
            let load = LoadModel::detecting(&dev(), &sys()).unwrap();
            let a = load.delays(f, 1e9).unwrap();
            let b = load.delays(f + 1.0, 1e9).unwrap();
            prop_assert!(b.computation > a.computation);
            prop_assert!(b.transmission > a.transmission);
            prop_assert!(b.recognition > a.recognition);
        }

        #[test]
        fn accuracy_monotone(f in 1.0f64..500.0, tau in 0.01f64..1.4) {
            let d = dev();
            let s = surface();
            let a = device_accuracy(&d, &s, f, tau).unwrap();
            prop_assert!(device_accuracy(&d, &s, f + 1.0, tau).unwrap() >= a);
            prop_assert!(device_accuracy(&d, &s, f, tau + 0.1).unwrap() <= a);
        }

        #[test]
        fn rate_positive(g in 1e-16f64..1e-6) {
            let mut d = dev();
            d.gains = vec![g];
            prop_assert!(data_rate(&d, &sys()).unwrap() > 0.0);
        }
    }
}
