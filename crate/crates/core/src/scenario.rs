//! Scenario generation and scenario files.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::device::DetectionTable;
use crate::error::{invalid, Error, Result};
use crate::perf::{AccuracySurface, DeviceProfile, SystemConfig};
use crate::stats::{default_model, SensingModelParams};
use crate::units::{self, dbm_to_watts, path_loss_db};

/// Generator parameters in engineering units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub devices: usize,
    pub radius_m: f64,
    pub min_distance_m: f64,
    pub p_max_dbm: [f64; 2],
    #[serde(with = "freq_pair")]
    pub f_local_hz: [f64; 2],
    pub p_tx_dbm: f64,
    #[serde(with = "units::frequency")]
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    pub noise_dbm_hz: f64,
    pub t_s: f64,
    pub e_s: f64,
    pub e_c: f64,
    pub c_l: f64,
    pub c_e: f64,
    pub v_l: f64,
    pub t_max_s: f64,
    #[serde(with = "units::frequency")]
    pub f_edge_hz: f64,
    pub p_min: f64,
    pub q_static: f64,
    pub window_len_s: f64,
    pub surface: AccuracySurface<f64>,
    pub model: SensingModelParams<f64>,
}

mod freq_pair {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair(#[serde(with = "units::frequency")] f64, #[serde(with = "units::frequency")] f64);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<[f64; 2], D::Error> {
        let Pair(a, b) = Pair::deserialize(d)?;
        Ok([a, b])
    }

    pub fn serialize<S: Serializer>(v: &[f64; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
        Pair(v[0], v[1]).serialize(s)
    }
}

impl Default for ScenarioParams {
    fn default() -> Self {
        let model = default_model();
        Self {
            devices: 12,
            radius_m: 500.0,
            min_distance_m: 10.0,
            p_max_dbm: [26.0, 29.0],
            f_local_hz: [35e6, 50e6],
            p_tx_dbm: 24.0,
            bandwidth_hz: 4e6,
            subcarriers: 10,
            noise_dbm_hz: -174.0,
            t_s: 1e-4,
            e_s: 2e-3,
            e_c: 1e-4,
            c_l: 2e4,
            c_e: 2e6,
            v_l: 64.0,
            t_max_s: 0.55,
            f_edge_hz: 42e9,
            p_min: 0.02,
            q_static: 0.4,
            window_len_s: model.window_len_s,
            surface: AccuracySurface::Parametric {
                alpha_inf: 0.95,
                f0: 25.0,
                kappa: 0.15,
                window_len_s: model.window_len_s,
            },
            model,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(self.devices >= 1, "devices must be >= 1");
        check(self.radius_m > 0.0, "radius_m must be > 0");
        check(
            self.min_distance_m > 0.0 && self.min_distance_m < self.radius_m,
            "min_distance_m must lie in (0, radius_m)",
        );
        check(self.p_max_dbm[0] <= self.p_max_dbm[1], "p_max_dbm range is reversed");
        check(
            self.f_local_hz[0] > 0.0 && self.f_local_hz[0] <= self.f_local_hz[1],
            "f_local_hz range must be positive and ordered",
        );
        check(self.subcarriers >= 1, "subcarriers must be >= 1");
        check(self.q_static > 0.0 && self.q_static < 1.0, "q_static must lie in (0, 1)");
        check(self.model.classes.len() >= 2, "model needs an action class");
        if let Err(e) = self.model.validate() {
            errs.push(format!("model: {e}"));
        }
        if let Err(e) = self.surface.validate() {
            errs.push(format!("surface: {e}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Static prior `q` with the rest split evenly over the action classes.
    pub fn priors(&self, q_static: f64) -> Vec<f64> {
        let n = self.model.classes.len();
        let mut p = vec![(1.0 - q_static) / (n - 1) as f64; n];
        p[0] = q_static;
        p
    }
}

/// A fully specified problem instance in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub system: SystemConfig<f64>,
    pub devices: Vec<DeviceProfile<f64>>,
    pub model: SensingModelParams<f64>,
    pub surface: AccuracySurface<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if let Err(e) = self.system.validate() {
            errs.push(e.to_string());
        }
        if self.devices.len() != self.system.k {
            errs.push(format!("{} devices but k = {}", self.devices.len(), self.system.k));
        }
        for d in &self.devices {
            if let Err(e) = d.validate() {
                errs.push(e.to_string());
            }
            if d.priors.len() != self.model.classes.len() {
                errs.push(format!("device {}: priors do not match the class list", d.id));
            }
        }
        if let Err(e) = self.model.validate() {
            errs.push(format!("model: {e}"));
        }
        if let Err(e) = self.surface.validate() {
            errs.push(format!("surface: {e}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn detection_table(&self) -> DetectionTable<f64> {
        DetectionTable::new(self.model.clone(), self.system.p_min)
    }

    pub fn with_edge_compute(&self, f_edge_total: f64) -> Self {
        let mut s = self.clone();
        s.system.f_edge_total = f_edge_total;
        s
    }

    pub fn with_delay(&self, t_max: f64) -> Self {
        let mut s = self.clone();
        s.system.t_max = t_max;
        s
    }

    /// Every device gets static prior `q` and uniform action priors.
    pub fn with_static_prob(&self, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("static probability must lie in (0, 1)"));
        }
        let n = self.model.classes.len();
        let mut s = self.clone();
        for d in &mut s.devices {
            d.priors = vec![(1.0 - q) / (n - 1) as f64; n];
            d.priors[0] = q;
        }
        Ok(s)
    }

    /// `k` devices resampled from this scenario's pool with the edge budget
    /// unchanged: every pool device `k / K` times, the remainder drawn
    /// without replacement in a seed-fixed order, so smaller counts are
    /// prefixes of larger ones.
    pub fn resample_devices(&self, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("device count must be >= 1"));
        }
        let pool = self.devices.len();
        let mut order: Vec<usize> = (0..pool).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut s = self.clone();
        s.devices = (0..k)
            .map(|id| {
                let mut d = self.devices[order[id % pool]].clone();
                d.id = id;
                d
            })
            .collect();
        s.system.k = k;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Places devices uniformly in the annulus `[min_distance, radius]` and draws
/// Rayleigh fading, power budgets and local compute per device.
pub fn generate_scenario(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sub_bw = params.bandwidth_hz / params.subcarriers as f64;
    let system = SystemConfig {
        bandwidth_hz: params.bandwidth_hz,
        subcarriers: params.subcarriers,
        noise_sigma_sq: units::noise_power_w(params.noise_dbm_hz, sub_bw),
        t_s: params.t_s,
        c_l: params.c_l,
        c_e: params.c_e,
        v_l: params.v_l,
        t_max: params.t_max_s,
        f_edge_total: params.f_edge_hz,
        p_min: params.p_min,
        k: params.devices,
        window_len_s: params.window_len_s,
    };
    let (r0, r1) = (params.min_distance_m, params.radius_m);
    let devices = (0..params.devices)
        .map(|id| {
            let u: f64 = rng.random();
            let d = (u * (r1 * r1 - r0 * r0) + r0 * r0).sqrt();
            let loss = 10f64.powf(-path_loss_db(d / 1000.0) / 10.0);
            let gains = (0..params.subcarriers)
                .map(|_| loss * rng.sample::<f64, _>(Exp1))
                .collect();
            let p_max = dbm_to_watts(rng.random_range(params.p_max_dbm[0]..=params.p_max_dbm[1]));
            let f_local = rng.random_range(params.f_local_hz[0]..=params.f_local_hz[1]);
            DeviceProfile {
                id,
                e_s: params.e_s,
                e_c: params.e_c,
                f_local,
                p_max,
                p_tx: dbm_to_watts(params.p_tx_dbm),
                gains,
                distance_m: d,
                priors: params.priors(params.q_static),
            }
        })
        .collect();
    let s = Scenario {
        seed,
        system,
        devices,
        model: params.model.clone(),
        surface: params.surface.clone(),
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let p = ScenarioParams::default();
        let a = generate_scenario(&p, 7).unwrap().to_json().unwrap();
        let b = generate_scenario(&p, 7).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&p, 8).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn setup_values_present() {
        let s = generate_scenario(&ScenarioParams::default(), 1).unwrap();
        assert_eq!(s.devices.len(), 12);
        assert_eq!(s.system.t_max, 0.55);
        assert_eq!(s.system.f_edge_total, 42e9);
        assert_eq!(s.system.p_min, 0.02);
        assert_eq!(s.system.bandwidth_hz, 4e6);
        for d in &s.devices {
            assert!((units::watts_to_dbm(d.p_tx) - 24.0).abs() < 1e-9);
            let dbm = units::watts_to_dbm(d.p_max);
            assert!((26.0..=29.0).contains(&(dbm + 1e-9)) && dbm <= 29.0 + 1e-9);
            assert!((35e6..=50e6).contains(&d.f_local));
            assert!(d.distance_m >= 10.0 && d.distance_m <= 500.0);
            assert_eq!(d.priors[0], 0.4);
            for &q in &d.priors[1..] {
                assert!((q - 0.6 / 7.0).abs() < 1e-15);
            }
        }
        let n0 = units::dbm_to_watts(-174.0) * 4e6 / 10.0;
        assert!((s.system.noise_sigma_sq / n0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn engineering_units_in_config() {
        let json = r#"{"f_edge_hz": "21GHz", "bandwidth_hz": "4 MHz", "f_local_hz": ["30MHz", 4.5e7]}"#;
        let p: ScenarioParams = serde_json::from_str(json).unwrap();
        assert_eq!(p.f_edge_hz, 21e9);
        assert_eq!(p.bandwidth_hz, 4e6);
        assert_eq!(p.f_local_hz, [30e6, 45e6]);
        assert_eq!(p.devices, 12);
    }

    #[test]
    fn file_roundtrip() {
        let s = generate_scenario(&ScenarioParams::default(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        s.save(&path).unwrap();
        assert_eq!(Scenario::load(&path).unwrap(), s);
    }

    #[test]
    fn invalid_params_list_every_problem() {
        let p = ScenarioParams {
            devices: 0,
            radius_m: -1.0,
            ..Default::default()
        };
        match generate_scenario(&p, 0) {
            Err(Error::Validation(v)) => assert!(v.len() >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resampling_keeps_pool_devices() {
        let s = generate_scenario(&ScenarioParams::default(), 3).unwrap();
        let r = s.resample_devices(20, 5).unwrap();
        assert_eq!(r.system.k, 20);
        for d in &r.devices {
            assert!(s.devices.iter().any(|o| o.gains == d.gains));
        }
        let small = s.resample_devices(8, 5).unwrap();
        for (a, b) in small.devices.iter().zip(&r.devices) {
            assert_eq!(a, b);
        }
        let full = s.resample_devices(24, 5).unwrap();
        for o in &s.devices {
            assert_eq!(full.devices.iter().filter(|d| d.gains == o.gains).count(), 2);
        }
    }
}
