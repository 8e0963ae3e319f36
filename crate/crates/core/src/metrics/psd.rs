//! Welch power spectral density: Hann-windowed, averaged, one-sided.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{AncError, Result};

/// Floor applied before taking logarithms.
const DB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// `k fs / segment` for `k = 0..=segment/2`.
    pub frequencies_hz: Vec<f64>,
    /// Power density in units^2 / Hz.
    pub density: Vec<f64>,
    /// `10 log10(density)`, dB re 1.
    pub psd_db: Vec<f64>,
    pub segment: usize,
    pub hop: usize,
    pub n_segments: usize,
}

impl PsdEstimate {
    pub fn bin_width_hz(&self) -> f64 {
        self.frequencies_hz.get(1).copied().unwrap_or(0.0)
    }

    /// Integral of the density over frequency; approximates the variance.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_hz()
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch estimate with a periodic Hann window and no detrending.
pub fn welch_psd(series: &[f64], sample_rate_hz: f64, segment: usize, overlap: f64) -> Result<PsdEstimate> {
    if segment < 2 {
        return Err(AncError::Config("segment must be at least 2 samples".into()));
    }
    if segment > series.len() {
        return Err(AncError::Config(format!(
            "segment of {segment} samples is longer than the series ({})",
            series.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(AncError::Config(format!("overlap must be in [0, 1), got {overlap}")));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(AncError::Config("sample rate must be positive".into()));
    }
    let hop = (segment - (overlap * segment as f64).round() as usize).max(1);
    let window = hann(segment);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let n_bins = segment / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); segment];
    let mut n_segments = 0;
    let mut start = 0;
    while start + segment <= series.len() {
        for ((b, x), w) in buf.iter_mut().zip(&series[start..start + segment]).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        n_segments += 1;
        start += hop;
    }
    let scale = 1.0 / (sample_rate_hz * window_power * n_segments as f64);
    let density: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (segment.is_multiple_of(2) && k == segment / 2) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    Ok(PsdEstimate {
        frequencies_hz: (0..n_bins)
            .map(|k| k as f64 * sample_rate_hz / segment as f64)
            .collect(),
        psd_db: density.iter().map(|p| 10.0 * p.max(DB_FLOOR).log10()).collect(),
        density,
        segment,
        hop,
        n_segments,
    })
}
