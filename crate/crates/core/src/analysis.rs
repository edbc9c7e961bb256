//! Signal utilities shared by the scenario runners: spectral peak
//! estimation, zero-crossing detection, and cross-correlation lag.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_SPECTRAL_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    /// Peak frequency in cycles per time unit.
    pub frequency: f64,
    /// `2 pi * frequency`; in units of `omega_R` when time is in `1/omega_R`.
    pub angular_frequency: f64,
    /// Amplitude of the equivalent sinusoid.
    pub amplitude: f64,
    /// Bin spacing `1 / (n dt)` before interpolation, cycles per time unit.
    pub resolution: f64,
    pub nyquist: f64,
    pub window: Window,
}

/// Uniform sample spacing, or an error naming the first irregular index.
pub fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::TooFewSamples {
            got: times.len(),
            need: 2,
        });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonUniformSampling { index: 1 });
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::NonUniformSampling { index: i + 1 });
        }
    }
    Ok(dt)
}

/// Dominant spectral peak of a uniformly sampled real series. The mean is
/// removed, the window applied, and the peak refined with a three-point
/// parabola through the magnitudes around the largest bin.
pub fn dominant_frequency(times: &[f64], values: &[f64], window: Window) -> Result<SpectralEstimate> {
    let n = values.len();
    if times.len() != n {
        return Err(Error::Dimension {
            what: "sample times",
            expected: n,
            got: times.len(),
        });
    }
    if n < MIN_SPECTRAL_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: MIN_SPECTRAL_SAMPLES,
        });
    }
    let dt = uniform_spacing(times)?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(spread > 1e-12 * scale) {
        return Err(Error::NoSpectralPeak);
    }

    let w = window.weights(n);
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .zip(&w)
        .map(|(v, wk)| Complex::new((v - mean) * wk, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mags: Vec<f64> = buf[..=half].iter().map(|z| z.norm()).collect();
    let (peak, &peak_mag) = mags
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one non-DC bin");
    if !(peak_mag > 0.0) {
        return Err(Error::NoSpectralPeak);
    }
    let offset = if peak < half {
        let (a, b, c) = (mags[peak - 1], mags[peak], mags[peak + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let resolution = 1.0 / (n as f64 * dt);
    let frequency = (peak as f64 + offset) * resolution;
    let window_gain: f64 = w.iter().sum();
    Ok(SpectralEstimate {
        frequency,
        angular_frequency: 2.0 * PI * frequency,
        amplitude: 2.0 * peak_mag / window_gain,
        resolution,
        nyquist: 0.5 / dt,
        window,
    })
}

fn interpolate_zero(t0: f64, v0: f64, t1: f64, v1: f64) -> f64 {
    if v1 == v0 {
        return t1;
    }
    t0 + (t1 - t0) * v0 / (v0 - v1)
}

/// Time of the first zero crossing, linearly interpolated between samples.
/// Leading exact zeros are skipped.
pub fn detect_sign_change(values: &[f64], times: &[f64]) -> Option<f64> {
    let start = values.iter().position(|v| *v != 0.0)?;
    let reference = values[start].signum();
    for k in start + 1..values.len().min(times.len()) {
        let v = values[k];
        if v == 0.0 {
            return Some(times[k]);
        }
        if v.signum() != reference {
            return Some(interpolate_zero(times[k - 1], values[k - 1], times[k], v));
        }
    }
    None
}

/// First downward crossing of zero after the series has reached `floor`.
pub fn detect_downward_crossing_after_peak(values: &[f64], times: &[f64], floor: f64) -> Option<f64> {
    let armed = values.iter().position(|v| *v >= floor)?;
    for k in armed + 1..values.len().min(times.len()) {
        if values[k] <= 0.0 {
            return Some(interpolate_zero(times[k - 1], values[k - 1], times[k], values[k]));
        }
    }
    None
}

/// Lag (in samples) maximizing `sum_i a_i b_{i + lag}` after mean removal.
/// A positive lag means `b` follows `a`. `max_lag` bounds the search.
pub fn crosscorr_lag(a: &[f64], b: &[f64], max_lag: Option<usize>) -> Result<i64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "cross-correlation input",
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, need: 2 });
    }
    let centered = |x: &[f64]| -> Vec<f64> {
        let m = x.iter().sum::<f64>() / n as f64;
        x.iter().map(|v| v - m).collect()
    };
    let a = centered(a);
    let b = centered(b);
    if a.iter().all(|v| *v == 0.0) || b.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("flat series in cross-correlation".into()));
    }
    let limit = max_lag.unwrap_or(n - 1).min(n - 1) as i64;
    let mut best = (f64::NEG_INFINITY, 0i64);
    for lag in -limit..=limit {
        // pairs (i, i + lag) in ascending i
        let lo = 0.max(-lag) as usize;
        let hi = (n as i64).min(n as i64 - lag) as usize;
        let mut sum = 0.0;
        for i in lo..hi {
            sum += a[i] * b[(i as i64 + lag) as usize];
        }
        if sum > best.0 || (sum == best.0 && lag.abs() < best.1.abs()) {
            best = (sum, lag);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn single_tone_peak() {
        // 200 samples per 1/omega_R for 50/omega_R
        let t = grid(10_000, 1.0 / 200.0);
        let x: Vec<f64> = t.iter().map(|t| (12.27 * t).sin()).collect();
        let est = dominant_frequency(&t, &x, Window::Hann).unwrap();
        assert!((est.angular_frequency - 12.27).abs() / 12.27 < 5e-3);
        assert!(est.frequency <= est.nyquist);
        assert_relative_eq!(est.resolution, 1.0 / 50.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_series_has_no_peak() {
        let t = grid(128, 0.1);
        assert_eq!(
            dominant_frequency(&t, &[3.0; 128], Window::Hann),
            Err(Error::NoSpectralPeak)
        );
    }

    #[test]
    fn larger_of_two_tones_wins() {
        let t = grid(4096, 0.01);
        let x: Vec<f64> = t.iter().map(|t| (5.0 * t).sin() + 3.0 * (17.0 * t).cos()).collect();
        let est = dominant_frequency(&t, &x, Window::Hann).unwrap();
        assert!((est.angular_frequency - 17.0).abs() < 0.1);
        assert_relative_eq!(est.amplitude, 3.0, max_relative = 0.2);
    }

    #[test]
    fn spectral_input_checks() {
        let t = grid(32, 0.1);
        assert!(matches!(
            dominant_frequency(&t, &[0.0; 32], Window::Hann),
            Err(Error::TooFewSamples { .. })
        ));
        let mut t = grid(100, 0.1);
        t[50] += 0.03;
        let x: Vec<f64> = t.iter().map(|t| t.sin()).collect();
        assert_eq!(
            dominant_frequency(&t, &x, Window::Hann),
            Err(Error::NonUniformSampling { index: 50 })
        );
    }

    #[test]
    fn sign_change_examples() {
        let t = grid(10, 1.0);
        assert_eq!(detect_sign_change(&[1.0; 10], &t), None);
        let x: Vec<f64> = t.iter().map(|t| t - 5.0).collect();
        assert_eq!(detect_sign_change(&x, &t), Some(5.0));
        let y: Vec<f64> = t.iter().map(|t| t - 4.5).collect();
        assert_relative_eq!(detect_sign_change(&y, &t).unwrap(), 4.5, epsilon = 1e-12);
    }

    #[test]
    fn downward_crossing_ignores_noise_below_floor() {
        let t = grid(2000, 0.01);
        // small jitter crosses zero early, then a real pulse rises and falls
        let x: Vec<f64> = t
            .iter()
            .map(|&t| {
                let jitter = 0.01 * (37.0 * t).sin();
                let pulse = if (2.0..12.0).contains(&t) {
                    (PI * (t - 2.0) / 8.0).sin()
                } else {
                    0.0
                };
                pulse + jitter - if t > 10.0 { 0.2 } else { 0.0 }
            })
            .collect();
        assert!(detect_sign_change(&x, &t).unwrap() < 0.2);
        let crossing = detect_downward_crossing_after_peak(&x, &t, 0.5).unwrap();
        assert!(crossing > 9.0 && crossing < 12.0, "{crossing}");
    }

    #[test]
    fn lag_of_shifted_series() {
        let a: Vec<f64> = (0..200)
            .map(|k| (k as f64 * 0.07).sin() + (k as f64 * 0.31).cos())
            .collect();
        let delayed: Vec<f64> = (0..200)
            .map(|k| {
                let k = k as f64 - 3.0;
                (k * 0.07).sin() + (k * 0.31).cos()
            })
            .collect();
        assert_eq!(crosscorr_lag(&a, &delayed, Some(20)).unwrap(), 3);
        assert_eq!(crosscorr_lag(&delayed, &a, Some(20)).unwrap(), -3);
        assert!(crosscorr_lag(&a, &[1.0; 200], None).is_err());
        assert!(crosscorr_lag(&a, &a[..10], None).is_err());
    }
}
