use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::WindowSpec;
use crate::error::{invalid, Result};
use crate::Scalar;

/// Reusable unitary DFT of a fixed length with scratch buffers.
pub struct SpectralAnalyzer<T: Scalar> {
    fft: Arc<dyn Fft<T>>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    scale: T,
}

impl<T: Scalar> SpectralAnalyzer<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("DFT length must be >= 1"));
        }
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            fft,
            buf: vec![Complex::default(); n],
            scratch,
            scale: T::one() / T::from_usize_lossy(n).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// `W[f] = n^{-1/2} sum_m h[m] exp(-j 2 pi f m / n)`.
    pub fn spectrum(&mut self, h: &[Complex<T>]) -> Result<&[Complex<T>]> {
        if h.len() != self.buf.len() {
            return Err(invalid(format!(
                "window has {} samples, analyzer expects {}",
                h.len(),
                self.buf.len()
            )));
        }
        self.buf.copy_from_slice(h);
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let s = self.scale;
        for w in &mut self.buf {
            *w = *w * s;
        }
        Ok(&self.buf)
    }

    /// Band power `sum_{f=lo..=hi} |W[f]|^2 / n` of one window.
    pub fn band_power(&mut self, h: &[Complex<T>], bins: (usize, usize)) -> Result<T> {
        let n = T::from_usize_lossy(h.len());
        let w = self.spectrum(h)?;
        Ok(band_energy(w, bins)? / n)
    }
}

fn band_energy<T: Scalar>(w: &[Complex<T>], (lo, hi): (usize, usize)) -> Result<T> {
    if lo > hi || hi >= w.len() {
        return Err(invalid(format!(
            "band bins {lo}..={hi} outside spectrum of length {}",
            w.len()
        )));
    }
    Ok(w[lo..=hi].iter().map(|c| c.norm_sqr()).sum())
}

/// Unitary DFT of one window.
pub fn dft_window<T: Scalar>(h: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if h.is_empty() {
        return Err(invalid("DFT input is empty"));
    }
    if h.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(invalid("DFT input contains non-finite values"));
    }
    let mut a = SpectralAnalyzer::new(h.len())?;
    Ok(a.spectrum(h)?.to_vec())
}

/// Inclusive DFT bin range of the band for an `n`-sample window at rate `f`.
///
/// Bin `k` sits at `k f / n` Hz; for `n = T f` this is `floor(F_lo T)..=ceil(F_hi T)`.
pub fn band_bins<T: Scalar>(spec: &WindowSpec<T>, n: usize, f: T) -> Result<(usize, usize)> {
    if !(f > T::zero()) {
        return Err(invalid("sampling rate must be positive"));
    }
    let res = T::from_usize_lossy(n) / f;
    let slack = T::lit(1e-9);
    let lo = (spec.band_lo_hz * res + slack).floor();
    let hi = (spec.band_hi_hz * res - slack).ceil().max(lo);
    let lo = lo.to_usize().unwrap_or(0);
    let hi = hi.to_usize().unwrap_or(usize::MAX);
    if hi >= n {
        return Err(invalid(format!(
            "band bins {lo}..={hi} outside spectrum of length {n}"
        )));
    }
    Ok((lo, hi))
}

/// High-frequency power of a window spectrum: band energy over the window length.
pub fn high_freq_power<T: Scalar>(spectrum: &[Complex<T>], spec: &WindowSpec<T>, f: T) -> Result<T> {
    let bins = band_bins(spec, spectrum.len(), f)?;
    Ok(band_energy(spectrum, bins)? / T::from_usize_lossy(spectrum.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(h: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = h.len();
        let s = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|f| {
                h.iter()
                    .enumerate()
                    .map(|(m, x)| {
                        let a = -2.0 * std::f64::consts::PI * (f * m) as f64 / n as f64;
                        x * Complex::new(a.cos(), a.sin())
                    })
                    .sum::<Complex<f64>>()
                    * s
            })
            .collect()
    }

    fn random(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn constant_signal_concentrates_at_dc() {
        let w = dft_window(&[Complex::new(1.0f64, 0.0); 4]).unwrap();
        assert_relative_eq!(w[0].re, 2.0, epsilon = 1e-15);
        for x in &w[1..] {
            assert!(x.norm() < 1e-15);
        }
    }

    #[test]
    fn matches_direct_summation() {
        let h = random(8, 1);
        let w = dft_window(&h).unwrap();
        for (a, b) in w.iter().zip(naive(&h)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_holds() {
        let h = random(150, 2);
        let w = dft_window(&h).unwrap();
        let eh: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        let ew: f64 = w.iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(eh, ew, max_relative = 1e-12);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(dft_window::<f64>(&[]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(dft_window(&[Complex::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn constant_signal_has_no_band_power() {
        let spec = WindowSpec::new(1.0, 0.5, 2.0, 10.0).unwrap();
        let w = dft_window(&[Complex::new(3.0f64, -1.0); 40]).unwrap();
        assert!(high_freq_power(&w, &spec, 40.0).unwrap() < 1e-25);
    }

    #[test]
    fn single_tone_power() {
        let (n, k, amp) = (60usize, 7usize, 1.7f64);
        let h: Vec<_> = (0..n)
            .map(|m| {
                let a = 2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64;
                Complex::new(a.cos(), a.sin()) * amp
            })
            .collect();
        let spec = WindowSpec::new(1.0, 0.5, 5.0, 10.0).unwrap();
        let p = high_freq_power(&dft_window(&h).unwrap(), &spec, 60.0).unwrap();
        let direct: f64 = naive(&h)[5..=10].iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        assert_relative_eq!(p, direct, max_relative = 1e-9);
        assert_relative_eq!(p, amp * amp, max_relative = 1e-9);
    }

    #[test]
    fn full_band_gives_mean_power() {
        let h = random(8, 3);
        let spec = WindowSpec::new(1.0, 0.5, 0.0, 7.0).unwrap();
        let p = high_freq_power(&dft_window(&h).unwrap(), &spec, 8.0).unwrap();
        let mean = h.iter().map(|c| c.norm_sqr()).sum::<f64>() / 8.0;
        assert_relative_eq!(p, mean, max_relative = 1e-12);
    }

    #[test]
    fn band_outside_spectrum_rejected() {
        let spec = WindowSpec::new(1.0, 0.5, 0.0, 9.0).unwrap();
        let w = dft_window(&random(8, 4)).unwrap();
        assert!(high_freq_power(&w, &spec, 8.0).is_err());
    }

    #[test]
    fn band_bins_default_band() {
        let spec = WindowSpec::new(1.5, 0.3, 10.0, 60.0).unwrap();
        assert_eq!(band_bins(&spec, 300, 200.0).unwrap(), (15, 90));
        assert_eq!(band_bins(&spec, 180, 120.0).unwrap(), (15, 90));
    }

    #[test]
    fn analyzer_in_f32() {
        let h: Vec<Complex<f32>> = random(16, 5)
            .into_iter()
            .map(|c| Complex::new(c.re as f32, c.im as f32))
            .collect();
        let mut a = SpectralAnalyzer::<f32>::new(16).unwrap();
        let e: f32 = a.spectrum(&h).unwrap().iter().map(|c| c.norm_sqr()).sum();
        let eh: f32 = h.iter().map(|c| c.norm_sqr()).sum();
        assert!((e - eh).abs() / eh < 1e-5);
    }
}
