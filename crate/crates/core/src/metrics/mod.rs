//! Noise reduction, convergence curves, Welch PSD and heatmap tables.

mod heatmap;
mod psd;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, ErrorSignal, HyperParams};
use crate::error::{AncError, Result};
use crate::filtering::MicSample;
use crate::scene::MicRole;

pub use heatmap::{heatmap_table, HeatmapRow, HeatmapTable};
pub use psd::{welch_psd, PsdEstimate};

/// Fraction of a run, counted from the end, used for steady-state figures.
pub const STEADY_STATE_FRACTION: f64 = 0.25;

/// Per-mic recorded signals. Outer index is the mic, inner the sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MicSeries {
    pub e: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub d_e: Vec<Vec<f64>>,
    pub d_z: Vec<Vec<f64>>,
}

impl MicSeries {
    pub fn with_capacity(n_primary: usize, n_secondary: usize, n_samples: usize) -> Self {
        let bank = |n: usize| (0..n).map(|_| Vec::with_capacity(n_samples)).collect();
        MicSeries {
            e: bank(n_primary),
            z: bank(n_secondary),
            d_e: bank(n_primary),
            d_z: bank(n_secondary),
        }
    }

    pub fn push(&mut self, sample: &MicSample) {
        let pairs = [
            (&mut self.e, &sample.e),
            (&mut self.z, &sample.z),
            (&mut self.d_e, &sample.d_e),
            (&mut self.d_z, &sample.d_z),
        ];
        for (series, values) in pairs {
            for (s, &v) in series.iter_mut().zip(values) {
                s.push(v);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.e
            .first()
            .or(self.z.first())
            .map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(controlled, baseline)` series of one mic.
    pub fn mic(&self, role: MicRole, index: usize) -> (&[f64], &[f64]) {
        match role {
            MicRole::Primary => (&self.e[index], &self.d_e[index]),
            MicRole::Secondary => (&self.z[index], &self.d_z[index]),
        }
    }

    pub fn count(&self, role: MicRole) -> usize {
        match role {
            MicRole::Primary => self.e.len(),
            MicRole::Secondary => self.z.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub algorithm: Algorithm,
    pub params: HyperParams,
    pub error_signal: ErrorSignal,
    pub update_stride: usize,
    pub secondary_path_error: f64,
    pub seed: u64,
    pub scene_digest: String,
    pub n_samples: usize,
    pub warmup: usize,
    pub filter_taps: usize,
}

/// Everything recorded by one controller run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub series: MicSeries,
    pub sample_rate_hz: u32,
    pub metadata: RunMetadata,
    pub final_weights: Vec<f64>,
}

impl ExperimentResult {
    /// The final `fraction` of the run, never reaching into the warm-up.
    pub fn steady_state_window(&self, fraction: f64) -> Range<usize> {
        let n = self.series.len();
        let tail = ((n as f64) * fraction).ceil() as usize;
        let start = n.saturating_sub(tail).max(self.metadata.warmup.min(n.saturating_sub(1)));
        start..n
    }

    /// Noise reduction of every mic of one role over the final `fraction`.
    pub fn steady_state_nr(&self, role: MicRole, fraction: f64) -> Result<Vec<f64>> {
        let window = self.steady_state_window(fraction);
        (0..self.series.count(role))
            .map(|i| {
                let (c, b) = self.series.mic(role, i);
                noise_reduction_db(c, b, window.clone())
            })
            .collect()
    }

    /// Mean over mics of the residual power in the final `fraction`.
    pub fn steady_state_mean_square(&self, role: MicRole, fraction: f64) -> f64 {
        let window = self.steady_state_window(fraction);
        let n = self.series.count(role);
        let total: f64 = (0..n)
            .map(|i| {
                let (c, _) = self.series.mic(role, i);
                c[window.clone()].iter().map(|v| v * v).sum::<f64>()
            })
            .sum();
        total / (n.max(1) * window.len().max(1)) as f64
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `10 log10(sum baseline^2 / sum controlled^2)` over `window`; positive
/// means the controlled signal is quieter.
pub fn noise_reduction_db(controlled: &[f64], baseline: &[f64], window: Range<usize>) -> Result<f64> {
    if window.end > controlled.len() || window.end > baseline.len() || window.start >= window.end {
        return Err(AncError::Config(format!(
            "window {window:?} is empty or exceeds the series (lengths {} and {})",
            controlled.len(),
            baseline.len()
        )));
    }
    let base = energy(&baseline[window.clone()]);
    if base <= 0.0 {
        return Err(AncError::Config(format!(
            "baseline has zero energy in window {window:?}"
        )));
    }
    let ctrl = energy(&controlled[window]);
    Ok(10.0 * (base / ctrl).log10())
}

/// Sliding-window noise reduction with a one-sample hop. Entry `i` covers
/// samples `i..i + window`.
pub fn convergence_curve(controlled: &[f64], baseline: &[f64], window: usize) -> Result<Vec<f64>> {
    Ok(convergence_curve_with_hop(controlled, baseline, window, 1)?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

/// Sliding-window noise reduction evaluated every `hop` samples. Returns
/// `(start sample, dB)` pairs.
pub fn convergence_curve_with_hop(
    controlled: &[f64],
    baseline: &[f64],
    window: usize,
    hop: usize,
) -> Result<Vec<(usize, f64)>> {
    if window == 0 || hop == 0 {
        return Err(AncError::Config("window and hop must be at least 1".into()));
    }
    let n = controlled.len().min(baseline.len());
    if window > n {
        return Err(AncError::Config(format!(
            "window of {window} samples exceeds series length {n}"
        )));
    }
    let prefix = |x: &[f64]| {
        let mut acc = 0.0;
        std::iter::once(0.0)
            .chain(x[..n].iter().map(|v| {
                acc += v * v;
                acc
            }))
            .collect::<Vec<f64>>()
    };
    let pc = prefix(controlled);
    let pb = prefix(baseline);
    (0..=n - window)
        .step_by(hop)
        .map(|start| {
            let end = start + window;
            let base = pb[end] - pb[start];
            if base <= 0.0 {
                return Err(AncError::Config(format!(
                    "baseline has zero energy in window {start}..{end}"
                )));
            }
            let ctrl = (pc[end] - pc[start]).max(0.0);
            Ok((start, 10.0 * (base / ctrl).log10()))
        })
        .collect()
}

/// Running median over `2 * half + 1` samples, truncated at the edges
/// (upper median for even-length edge windows).
pub fn median_filter(x: &[f64], half: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut buf = x[i.saturating_sub(half)..(i + half + 1).min(x.len())].to_vec();
            buf.sort_by(f64::total_cmp);
            buf[buf.len() / 2]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_zero_db() {
        let x = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(noise_reduction_db(&x, &x, 0..4).unwrap(), 0.0);
    }

    #[test]
    fn scaled_by_inverse_root_ten_is_ten_db() {
        let b = [1.0, -2.0, 0.5, 3.0];
        let c: Vec<f64> = b.iter().map(|v| v / 10f64.sqrt()).collect();
        let nr = noise_reduction_db(&c, &b, 0..4).unwrap();
        assert!((nr - 10.0).abs() < 1e-9);
    }

    #[test]
    fn zero_baseline_is_an_error() {
        assert!(noise_reduction_db(&[1.0, 1.0], &[0.0, 0.0], 0..2).is_err());
        assert!(noise_reduction_db(&[1.0], &[1.0], 0..2).is_err());
        assert!(convergence_curve(&[1.0, 1.0], &[1.0, 0.0], 1).is_err());
    }

    #[test]
    fn full_window_curve_equals_noise_reduction() {
        let b: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let c: Vec<f64> = b.iter().enumerate().map(|(i, v)| v * (0.1 + i as f64 / 100.0)).collect();
        let curve = convergence_curve(&c, &b, 100).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0], noise_reduction_db(&c, &b, 0..100).unwrap());
    }

    #[test]
    fn unchanged_signal_gives_flat_zero_curve() {
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin() + 2.0).collect();
        let curve = convergence_curve(&b, &b, 10).unwrap();
        assert_eq!(curve.len(), 41);
        assert!(curve.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hop_decimates() {
        let b = vec![1.0; 20];
        let curve = convergence_curve_with_hop(&b, &b, 5, 4).unwrap();
        let starts: Vec<usize> = curve.iter().map(|p| p.0).collect();
        assert_eq!(starts, vec![0, 4, 8, 12]);
    }

    #[test]
    fn median_filter_removes_spikes() {
        let x = [0.0, 1.0, 100.0, 3.0, 4.0];
        assert_eq!(median_filter(&x, 1), vec![1.0, 1.0, 3.0, 4.0, 4.0]);
        assert_eq!(median_filter(&x, 0), x.to_vec());
    }

    proptest! {
        #[test]
        fn nr_invariant_under_common_scaling(
            b in prop::collection::vec(0.1f64..10.0, 1..50),
            ratio in 0.01f64..10.0,
            scale in 1e-3f64..1e3,
        ) {
            let c: Vec<f64> = b.iter().map(|v| v * ratio).collect();
            let n = b.len();
            let nr = noise_reduction_db(&c, &b, 0..n).unwrap();
            let bs: Vec<f64> = b.iter().map(|v| v * scale).collect();
            let cs: Vec<f64> = c.iter().map(|v| v * scale).collect();
            let nr_scaled = noise_reduction_db(&cs, &bs, 0..n).unwrap();
            prop_assert!((nr - nr_scaled).abs() < 1e-9);
            prop_assert!((nr + 20.0 * ratio.log10()).abs() < 1e-9);
        }
    }
}
