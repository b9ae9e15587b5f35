//! Windowed spectral processing of CSI streams and the onset detector.

mod detect;
mod dft;
pub mod io;
mod synth;

pub use detect::{detect_onsets, power_difference, power_series};
pub use dft::{band_bins, dft_window, high_freq_power, SpectralAnalyzer};
pub use synth::{generate_csi_trace, ClassSynthesis, SegmentSpec};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Scalar;

/// Class id of the static (no target motion) phase.
pub const STATIC_CLASS: u32 = 1;

/// Ground-truth label: samples `[start, end)` belong to `class_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSegment {
    pub start: usize,
    pub end: usize,
    pub class_id: u32,
}

/// Complex CSI stream, one sample vector per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTrace<T> {
    /// `subcarriers[n][m]` is sample `m` of subcarrier `n`.
    pub subcarriers: Vec<Vec<Complex<T>>>,
    pub sample_rate: T,
    pub labels: Vec<LabelSegment>,
}

impl<T: Scalar> CsiTrace<T> {
    pub fn new(
        subcarriers: Vec<Vec<Complex<T>>>,
        sample_rate: T,
        labels: Vec<LabelSegment>,
    ) -> Result<Self> {
        let trace = Self {
            subcarriers,
            sample_rate,
            labels,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > T::zero()) || !self.sample_rate.is_finite() {
            return Err(invalid("sample_rate must be positive and finite"));
        }
        let Some(first) = self.subcarriers.first() else {
            return Err(invalid("trace has no subcarriers"));
        };
        let len = first.len();
        for (n, sc) in self.subcarriers.iter().enumerate() {
            if sc.len() != len {
                return Err(invalid(format!(
                    "subcarrier {n} has {} samples, expected {len}",
                    sc.len()
                )));
            }
            if let Some(m) = sc.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(invalid(format!("non-finite sample at subcarrier {n}, index {m}")));
            }
        }
        let mut prev_end = 0usize;
        for (i, seg) in self.labels.iter().enumerate() {
            if seg.start >= seg.end {
                return Err(invalid(format!("label segment {i} is empty or reversed")));
            }
            if seg.start < prev_end {
                return Err(invalid(format!("label segment {i} overlaps or is out of order")));
            }
            prev_end = seg.end;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.subcarriers.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The subcarrier used for detection.
    pub fn primary(&self) -> &[Complex<T>] {
        &self.subcarriers[0]
    }

    /// Class of sample `m` according to the labels, if labeled.
    pub fn class_at(&self, m: usize) -> Option<u32> {
        let idx = self.labels.partition_point(|s| s.end <= m);
        self.labels
            .get(idx)
            .filter(|s| s.start <= m && m < s.end)
            .map(|s| s.class_id)
    }

    /// Copy with samples `[start, len)` only; labels are clipped and shifted.
    pub fn slice_from(&self, start: usize) -> Self {
        let start = start.min(self.len());
        let subcarriers = self
            .subcarriers
            .iter()
            .map(|sc| sc[start..].to_vec())
            .collect();
        let labels = self
            .labels
            .iter()
            .filter(|s| s.end > start)
            .map(|s| LabelSegment {
                start: s.start.saturating_sub(start),
                end: s.end - start,
                class_id: s.class_id,
            })
            .collect();
        Self {
            subcarriers,
            sample_rate: self.sample_rate,
            labels,
        }
    }
}

/// Analysis window length, detector stride and the high-frequency band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec<T> {
    /// Window length in seconds.
    pub window_len_s: T,
    /// Detector time step in seconds.
    pub step_s: T,
    pub band_lo_hz: T,
    pub band_hi_hz: T,
}

impl<T: Scalar> WindowSpec<T> {
    pub fn new(window_len_s: T, step_s: T, band_lo_hz: T, band_hi_hz: T) -> Result<Self> {
        let spec = Self {
            window_len_s,
            step_s,
            band_lo_hz,
            band_hi_hz,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_s > T::zero() && self.step_s <= self.window_len_s) {
            return Err(invalid("require 0 < step_s <= window_len_s"));
        }
        if !(self.band_lo_hz >= T::zero() && self.band_lo_hz < self.band_hi_hz) {
            return Err(invalid("require 0 <= band_lo_hz < band_hi_hz"));
        }
        Ok(())
    }

    /// Checks the spec against a sample rate: the band must lie below
    /// Nyquist and both window and step must round to at least 2 samples.
    pub fn validate_for(&self, sample_rate: T) -> Result<()> {
        self.validate()?;
        if self.band_hi_hz > sample_rate / T::lit(2.0) {
            return Err(invalid(format!(
                "band upper edge {} Hz exceeds Nyquist {} Hz",
                self.band_hi_hz,
                sample_rate / T::lit(2.0)
            )));
        }
        let n = self.window_samples(sample_rate)?;
        self.step_samples(sample_rate)?;
        band_bins(self, n, sample_rate)?;
        Ok(())
    }

    /// `round(T^s F)`, at least 2.
    pub fn window_samples(&self, sample_rate: T) -> Result<usize> {
        quantize(self.window_len_s * sample_rate, "window")
    }

    /// `round(tau F)`, at least 2.
    pub fn step_samples(&self, sample_rate: T) -> Result<usize> {
        quantize(self.step_s * sample_rate, "step")
    }
}

fn quantize<T: Scalar>(x: T, what: &str) -> Result<usize> {
    let n = x.round().to_usize().unwrap_or(0);
    if n < 2 {
        return Err(invalid(format!(
            "{what} rounds to {n} samples; at least 2 are required"
        )));
    }
    Ok(n)
}

/// Detected action onset and the window forwarded to the edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent<T> {
    pub onset_sample: usize,
    /// Half-open sample range `[onset, onset + window)`.
    pub forward_window: (usize, usize),
    pub trigger_delta_power: T,
}
