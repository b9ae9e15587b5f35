//! Engineering-unit conversions. Everything downstream is SI.

use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{invalid, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Large-scale path loss in dB at distance `d_km` kilometres.
pub fn path_loss_db(d_km: f64) -> f64 {
    128.1 + 37.6 * d_km.log10()
}

/// Noise power of one subcarrier of width `bandwidth_hz` from a density in dBm/Hz.
pub fn noise_power_w(density_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(density_dbm_hz) * bandwidth_hz
}

/// Parses `"42GHz"`, `"35 MHz"`, `"800kHz"`, `"1e9"` into cycles/s (or Hz).
pub fn parse_frequency(s: &str) -> Result<f64> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let (num, mult) = [("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)]
        .iter()
        .find_map(|&(suf, m)| lower.strip_suffix(suf).map(|n| (n.trim().to_string(), m)))
        .unwrap_or((lower.clone(), 1.0));
    let v: f64 = num
        .parse()
        .map_err(|_| invalid(format!("cannot parse frequency {s:?}")))?;
    if !v.is_finite() {
        return Err(invalid(format!("frequency {s:?} is not finite")));
    }
    Ok(v * mult)
}

/// Serde adapter accepting a number in SI units or a suffixed string.
pub mod frequency {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(s) => parse_frequency(&s).map_err(serde::de::Error::custom),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(*v)
    }
}
