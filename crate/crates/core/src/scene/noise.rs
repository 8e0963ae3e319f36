use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};

/// Source sequence `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// Zero-mean white Gaussian noise.
    GaussianWhite { variance: f64 },
    /// Raw little-endian f32 samples.
    File { path: PathBuf },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::GaussianWhite { variance } if !(variance.is_finite() && *variance > 0.0) => {
                Err(AncError::Config(format!(
                    "noise variance must be positive and finite, got {variance}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Resolve a relative file path against `base`.
    pub fn resolved(&self, base: &Path) -> NoiseSpec {
        match self {
            NoiseSpec::File { path } if path.is_relative() => NoiseSpec::File {
                path: base.join(path),
            },
            other => other.clone(),
        }
    }
}

/// Produce `n_samples` of the source sequence. Deterministic in `seed`.
pub fn generate_noise(spec: &NoiseSpec, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if n_samples == 0 {
        return Err(AncError::Config("n_samples must be at least 1".into()));
    }
    match spec {
        NoiseSpec::GaussianWhite { variance } => {
            let normal = Normal::new(0.0, variance.sqrt())
                .map_err(|e| AncError::Config(format!("noise distribution: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n_samples).map(|_| normal.sample(&mut rng)).collect())
        }
        NoiseSpec::File { path } => {
            let samples = read_f32le(path)?;
            if samples.len() < n_samples {
                return Err(AncError::shape(
                    format!("noise file {}", path.display()),
                    format!(">= {n_samples} samples"),
                    samples.len(),
                ));
            }
            if let Some(i) = samples[..n_samples].iter().position(|v| !v.is_finite()) {
                return Err(AncError::NonFinite {
                    what: path.display().to_string(),
                    index: i,
                });
            }
            Ok(samples[..n_samples].to_vec())
        }
    }
}

/// Read a raw little-endian f32 file, widened to f64.
pub fn read_f32le(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| AncError::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(AncError::shape(
            format!("{} (byte length)", path.display()),
            "a multiple of 4",
            bytes.len(),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_f32le(path: &Path, data: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = data
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|e| AncError::io(path, e))
}
