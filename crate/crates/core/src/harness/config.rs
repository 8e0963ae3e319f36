//! JSON experiment configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, ControllerSetup, ErrorSignal, HyperParams};
use crate::error::{AncError, Result};
use crate::metrics::STEADY_STATE_FRACTION;
use crate::scene::{
    generate_synthetic_irs, load_ir_set, ImpulseResponseSet, MicRole, SceneConfig,
    SyntheticRoomSpec,
};

/// Where the impulse responses come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RoomSource {
    Synthetic(SyntheticRoomSpec),
    /// Path to an IR manifest, relative to the config file.
    Manifest(PathBuf),
}

impl RoomSource {
    pub fn build(&self, scene: &SceneConfig) -> Result<ImpulseResponseSet> {
        let irs = match self {
            RoomSource::Synthetic(spec) => generate_synthetic_irs(spec, scene)?,
            RoomSource::Manifest(path) => load_ir_set(path)?,
        };
        scene.check_irs(&irs)?;
        Ok(irs)
    }

    /// Mic positions in meters, primary mics first; `None` for manifests.
    pub fn mic_positions(&self, role: MicRole, count: usize) -> Vec<Option<[f64; 3]>> {
        match self {
            RoomSource::Synthetic(spec) => {
                let list = match role {
                    MicRole::Primary => &spec.primary_mic_positions_m,
                    MicRole::Secondary => &spec.secondary_mic_positions_m,
                };
                list.iter().copied().map(Some).collect()
            }
            RoomSource::Manifest(_) => vec![None; count],
        }
    }
}

/// One controller to run: an algorithm name plus its loop options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmEntry {
    pub name: Algorithm,
    /// Output directory stem; defaults to the algorithm name. Must be unique.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub params: HyperParams,
    #[serde(default)]
    pub error_signal: ErrorSignal,
    #[serde(default = "default_stride")]
    pub update_stride: usize,
    #[serde(default)]
    pub secondary_path_error: f64,
}

fn default_stride() -> usize {
    1
}

impl AlgorithmEntry {
    pub fn new(name: Algorithm, params: HyperParams) -> Self {
        AlgorithmEntry {
            name,
            label: None,
            params,
            error_signal: ErrorSignal::default(),
            update_stride: 1,
            secondary_path_error: 0.0,
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.name.name())
    }

    pub fn setup(&self) -> ControllerSetup {
        ControllerSetup {
            algorithm: self.name,
            params: self.params.clone(),
            error_signal: self.error_signal,
            update_stride: self.update_stride,
            secondary_path_error: self.secondary_path_error,
        }
    }
}

fn default_window_s() -> f64 {
    0.25
}
fn default_hop_s() -> f64 {
    0.01
}
fn default_segment() -> usize {
    1024
}
fn default_overlap() -> f64 {
    0.5
}
fn default_fraction() -> f64 {
    STEADY_STATE_FRACTION
}

/// Metric settings; every field has a documented default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricOptions {
    #[serde(default = "default_window_s")]
    pub convergence_window_s: f64,
    #[serde(default = "default_hop_s")]
    pub convergence_hop_s: f64,
    #[serde(default = "default_segment")]
    pub psd_segment: usize,
    #[serde(default = "default_overlap")]
    pub psd_overlap: f64,
    #[serde(default = "default_fraction")]
    pub steady_state_fraction: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            convergence_window_s: default_window_s(),
            convergence_hop_s: default_hop_s(),
            psd_segment: default_segment(),
            psd_overlap: default_overlap(),
            steady_state_fraction: default_fraction(),
        }
    }
}

impl MetricOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(AncError::Config(msg.into()));
        if !(self.convergence_window_s.is_finite() && self.convergence_window_s > 0.0) {
            return bad("convergence_window_s must be positive");
        }
        if !(self.convergence_hop_s.is_finite() && self.convergence_hop_s > 0.0) {
            return bad("convergence_hop_s must be positive");
        }
        if self.psd_segment < 2 {
            return bad("psd_segment must be at least 2");
        }
        if !(0.0..1.0).contains(&self.psd_overlap) {
            return bad("psd_overlap must be in [0, 1)");
        }
        if !(self.steady_state_fraction > 0.0 && self.steady_state_fraction <= 1.0) {
            return bad("steady_state_fraction must be in (0, 1]");
        }
        Ok(())
    }
}

/// A full experiment: one scene, several controllers, several noise seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub room: RoomSource,
    pub algorithms: Vec<AlgorithmEntry>,
    /// Export directory, relative to the config file.
    pub output_dir: PathBuf,
    /// Noise seeds; defaults to `[scene.seed]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub metrics: MetricOptions,
}

/// Resolved problem sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub filter_len: usize,
    pub n_speakers: usize,
    pub n_refs: usize,
    pub filter_taps: usize,
    pub n_primary: usize,
    pub n_secondary: usize,
    pub n_samples: usize,
}

impl ExperimentConfig {
    /// Parse `path` and resolve relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AncError::io(path, e))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| AncError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let RoomSource::Manifest(p) = &mut self.room {
            *p = base.join(&*p);
        }
        self.scene.noise = self.scene.noise.resolved(base);
        self.output_dir = base.join(&self.output_dir);
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![self.scene.seed])
    }

    /// Check everything that can be checked without simulating.
    pub fn validate(&self) -> Result<Dimensions> {
        self.scene.validate()?;
        self.metrics.validate()?;
        if self.algorithms.is_empty() {
            return Err(AncError::Config("at least one algorithm is required".into()));
        }
        let mut labels = BTreeSet::new();
        for entry in &self.algorithms {
            entry.setup().validate()?;
            let label = entry.label();
            if label.is_empty() || label.contains(['/', '\\']) {
                return Err(AncError::Config(format!("invalid algorithm label {label:?}")));
            }
            if !labels.insert(label) {
                return Err(AncError::Config(format!(
                    "duplicate algorithm label {label:?}; set distinct \"label\" fields"
                )));
            }
        }
        if self.seeds.as_ref().is_some_and(Vec::is_empty) {
            return Err(AncError::Config("seeds must not be empty".into()));
        }
        if let RoomSource::Synthetic(spec) = &self.room {
            spec.validate(&self.scene)?;
        }
        let s = &self.scene;
        Ok(Dimensions {
            filter_len: s.filter_len(),
            n_speakers: s.n_speakers,
            n_refs: s.n_refs,
            filter_taps: s.filter_taps,
            n_primary: s.n_primary_mics,
            n_secondary: s.n_secondary_mics,
            n_samples: s.n_samples(),
        })
    }
}
