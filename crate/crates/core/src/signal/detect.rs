use num_complex::Complex;

use super::{band_bins, CsiTrace, DetectionEvent, SpectralAnalyzer, WindowSpec};
use crate::error::{invalid, Result};
use crate::Scalar;

/// Signed change of high-frequency power between consecutive windows.
#[inline]
pub fn power_difference<T: Scalar>(p_curr: T, p_prev: T) -> T {
    p_curr - p_prev
}

/// Sliding window powers of one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    /// Window length in samples.
    pub window: usize,
    /// Stride in samples.
    pub step: usize,
    /// `powers[j]` covers samples `[j * step, j * step + window)`.
    pub powers: Vec<T>,
}

/// High-frequency power of every window of `samples` at stride `round(tau F)`.
pub fn power_series<T: Scalar>(
    samples: &[Complex<T>],
    spec: &WindowSpec<T>,
    f: T,
) -> Result<PowerSeries<T>> {
    spec.validate()?;
    let window = spec.window_samples(f)?;
    let step = spec.step_samples(f)?;
    if samples.len() < window {
        return Err(invalid(format!(
            "trace has {} samples, shorter than one {window}-sample window",
            samples.len()
        )));
    }
    let bins = band_bins(spec, window, f)?;
    let mut fft = SpectralAnalyzer::new(window)?;
    let count = (samples.len() - window) / step + 1;
    let powers = (0..count)
        .map(|j| fft.band_power(&samples[j * step..j * step + window], bins))
        .collect::<Result<_>>()?;
    Ok(PowerSeries {
        window,
        step,
        powers,
    })
}

/// Slides over subcarrier 0 and reports every window whose power rise
/// exceeds `eta`. After an event, tests resume once the previous window no
/// longer ends before the forwarded window.
pub fn detect_onsets<T: Scalar>(
    trace: &CsiTrace<T>,
    spec: &WindowSpec<T>,
    eta: T,
) -> Result<Vec<DetectionEvent<T>>> {
    trace.validate()?;
    if eta.is_nan() {
        return Err(invalid("threshold is NaN"));
    }
    let series = power_series(trace.primary(), spec, trace.sample_rate)?;
    let (n, s) = (series.window, series.step);
    let mut events = Vec::new();
    let mut resume_at = 0usize;
    for j in 1..series.powers.len() {
        if (j - 1) * s < resume_at {
            continue;
        }
        let dp = power_difference(series.powers[j], series.powers[j - 1]);
        if dp > eta {
            let last = j * s + n - 1;
            let onset = last - s / 2;
            events.push(DetectionEvent {
                onset_sample: onset,
                forward_window: (onset, onset + n),
                trigger_delta_power: dp,
            });
            resume_at = onset;
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_csi_trace, SegmentSpec};
    use crate::stats::default_model;

    fn spec(tau: f64) -> WindowSpec<f64> {
        WindowSpec::new(1.5, tau, 10.0, 60.0).unwrap()
    }

    #[test]
    fn difference_is_signed() {
        assert_eq!(power_difference(5.0, 5.0), 0.0);
        assert!((power_difference(7.2, 5.0) - 2.2f64).abs() < 1e-15);
        assert!(power_difference(1.0, 3.0) < 0.0);
    }

    #[test]
    fn short_trace_rejected() {
        let t = CsiTrace::new(vec![vec![Complex::new(0.0, 0.0); 100]], 200.0, vec![]).unwrap();
        assert!(detect_onsets(&t, &spec(0.3), 0.1).is_err());
    }

    #[test]
    fn infinite_threshold_detects_nothing() {
        let m = default_model();
        let sched = [SegmentSpec::new(1, 4.0), SegmentSpec::new(6, 3.0)];
        let t = generate_csi_trace(&m, &sched, 200.0, 1).unwrap();
        assert!(detect_onsets(&t, &spec(0.3), f64::INFINITY).unwrap().is_empty());
    }

    #[test]
    fn forward_window_has_window_length() {
        let m = default_model();
        let sched = [SegmentSpec::new(1, 4.0), SegmentSpec::new(6, 3.0)];
        let t = generate_csi_trace(&m, &sched, 200.0, 2).unwrap();
        let ev = detect_onsets(&t, &spec(0.3), 0.3).unwrap();
        assert!(!ev.is_empty());
        for e in &ev {
            assert_eq!(e.forward_window.1 - e.forward_window.0, 300);
            assert_eq!(e.forward_window.0, e.onset_sample);
            assert!(e.trigger_delta_power > 0.3);
        }
    }

    #[test]
    fn events_do_not_repeat_within_forwarded_window() {
        let m = default_model();
        let sched = [SegmentSpec::new(1, 4.0), SegmentSpec::new(6, 6.0)];
        let t = generate_csi_trace(&m, &sched, 200.0, 3).unwrap();
        let ev = detect_onsets(&t, &spec(0.2), 0.0).unwrap();
        for w in ev.windows(2) {
            assert!(w[1].onset_sample >= w[0].forward_window.1);
        }
    }

    #[test]
    fn powers_scale_quadratically() {
        let m = default_model();
        let t = generate_csi_trace(&m, &[SegmentSpec::new(2, 3.0)], 150.0, 4).unwrap();
        let s = spec(0.4);
        let a = power_series(t.primary(), &s, 150.0).unwrap();
        let scaled: Vec<_> = t.primary().iter().map(|c| c * 4.0).collect();
        let b = power_series(&scaled, &s, 150.0).unwrap();
        for (x, y) in a.powers.iter().zip(&b.powers) {
            assert_eq!(*y, 16.0 * x);
        }
    }
}
