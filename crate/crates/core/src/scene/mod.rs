//! Acoustic scenes: counts, noise, and every FIR propagation path.

mod manifest;
mod noise;
mod synthetic;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AncError, Result};

pub use manifest::{load_ir_set, write_ir_set, ArrayRef, IrManifest};
pub use noise::{generate_noise, read_f32le, write_f32le, NoiseSpec};
pub use synthetic::{generate_synthetic_irs, SyntheticRoomSpec, DISTANCE_FLOOR_M};

/// Counts and run parameters shared by every algorithm in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub sample_rate_hz: u32,
    pub n_speakers: usize,
    pub n_refs: usize,
    pub n_primary_mics: usize,
    pub n_secondary_mics: usize,
    pub filter_taps: usize,
    pub duration_s: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl SceneConfig {
    /// The desk-scale default: 2 speakers, 1 reference, 2 primary and 8
    /// secondary mics, 32 taps at 8 kHz for 20 s.
    pub fn desk_scale() -> Self {
        SceneConfig {
            sample_rate_hz: 8000,
            n_speakers: 2,
            n_refs: 1,
            n_primary_mics: 2,
            n_secondary_mics: 8,
            filter_taps: 32,
            duration_s: 20.0,
            noise: NoiseSpec::GaussianWhite { variance: 1.0 },
            seed: 1,
        }
    }

    /// Length of the stacked control-filter vector, `N_s * N_r * N_t`.
    pub fn filter_len(&self) -> usize {
        self.n_speakers * self.n_refs * self.filter_taps
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("sample_rate_hz", self.sample_rate_hz as usize),
            ("n_speakers", self.n_speakers),
            ("n_refs", self.n_refs),
            ("n_primary_mics", self.n_primary_mics),
            ("n_secondary_mics", self.n_secondary_mics),
            ("filter_taps", self.filter_taps),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(AncError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(AncError::Config(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if self.n_samples() < self.filter_taps {
            return Err(AncError::Config(format!(
                "duration_s * sample_rate_hz = {} samples is shorter than filter_taps = {}",
                self.n_samples(),
                self.filter_taps
            )));
        }
        self.noise.validate()
    }

    /// Check that an impulse response set matches these counts.
    pub fn check_irs(&self, irs: &ImpulseResponseSet) -> Result<()> {
        let pairs = [
            ("primary mics", self.n_primary_mics, irs.n_primary()),
            ("secondary mics", self.n_secondary_mics, irs.n_secondary()),
            ("speakers", self.n_speakers, irs.n_speakers()),
            ("reference mics", self.n_refs, irs.n_refs()),
        ];
        for (what, expected, found) in pairs {
            if expected != found {
                return Err(AncError::shape(
                    format!("impulse response set ({what})"),
                    expected,
                    found,
                ));
            }
        }
        Ok(())
    }
}

/// Which microphone class a signal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicRole {
    Primary,
    Secondary,
}

impl MicRole {
    pub fn prefix(self) -> char {
        match self {
            MicRole::Primary => 'e',
            MicRole::Secondary => 'z',
        }
    }
}

/// Every FIR path of one scene.
///
/// `g_e[j][s]` is the path from speaker `s` to primary mic `j`; `g_z` is
/// the same for secondary mics. Within a group all filters share one tap
/// count.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponseSet {
    pub p_e: Vec<Vec<f64>>,
    pub p_z: Vec<Vec<f64>>,
    pub g_e: Vec<Vec<Vec<f64>>>,
    pub g_z: Vec<Vec<Vec<f64>>>,
    pub h_ref: Vec<Vec<f64>>,
}

impl ImpulseResponseSet {
    /// Build and validate a set. `h_ref` of `None` means one unit-impulse
    /// reference per entry of `n_refs`, i.e. the reference is the noise itself.
    pub fn new(
        p_e: Vec<Vec<f64>>,
        p_z: Vec<Vec<f64>>,
        g_e: Vec<Vec<Vec<f64>>>,
        g_z: Vec<Vec<Vec<f64>>>,
        h_ref: Option<Vec<Vec<f64>>>,
        n_refs: usize,
    ) -> Result<Self> {
        let h_ref = h_ref.unwrap_or_else(|| vec![vec![1.0]; n_refs]);
        let set = ImpulseResponseSet {
            p_e,
            p_z,
            g_e,
            g_z,
            h_ref,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn n_primary(&self) -> usize {
        self.p_e.len()
    }

    pub fn n_secondary(&self) -> usize {
        self.p_z.len()
    }

    pub fn n_speakers(&self) -> usize {
        self.g_e
            .first()
            .or(self.g_z.first())
            .map_or(0, |row| row.len())
    }

    pub fn n_refs(&self) -> usize {
        self.h_ref.len()
    }

    pub fn primary_path(&self, role: MicRole, mic: usize) -> &[f64] {
        match role {
            MicRole::Primary => &self.p_e[mic],
            MicRole::Secondary => &self.p_z[mic],
        }
    }

    pub fn secondary_path(&self, role: MicRole, mic: usize, speaker: usize) -> &[f64] {
        match role {
            MicRole::Primary => &self.g_e[mic][speaker],
            MicRole::Secondary => &self.g_z[mic][speaker],
        }
    }

    /// Longest FIR in the set.
    pub fn max_len(&self) -> usize {
        self.all_filters().map(|(_, h)| h.len()).max().unwrap_or(1)
    }

    fn all_filters(&self) -> impl Iterator<Item = (String, &Vec<f64>)> {
        let p = self
            .p_e
            .iter()
            .enumerate()
            .map(|(j, h)| (format!("p_e[{j}]"), h))
            .chain(
                self.p_z
                    .iter()
                    .enumerate()
                    .map(|(k, h)| (format!("p_z[{k}]"), h)),
            );
        let g = self
            .g_e
            .iter()
            .enumerate()
            .flat_map(|(j, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(s, h)| (format!("g_e[{j}][{s}]"), h))
            })
            .chain(self.g_z.iter().enumerate().flat_map(|(k, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(s, h)| (format!("g_z[{k}][{s}]"), h))
            }));
        let r = self
            .h_ref
            .iter()
            .enumerate()
            .map(|(r, h)| (format!("h_ref[{r}]"), h));
        p.chain(g).chain(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_e.len() != self.p_e.len() {
            return Err(AncError::shape(
                "g_e (primary mic count)",
                self.p_e.len(),
                self.g_e.len(),
            ));
        }
        if self.g_z.len() != self.p_z.len() {
            return Err(AncError::shape(
                "g_z (secondary mic count)",
                self.p_z.len(),
                self.g_z.len(),
            ));
        }
        let n_s = self.n_speakers();
        for (name, bank) in [("g_e", &self.g_e), ("g_z", &self.g_z)] {
            for (m, row) in bank.iter().enumerate() {
                if row.len() != n_s {
                    return Err(AncError::shape(
                        format!("{name}[{m}] (speaker count)"),
                        n_s,
                        row.len(),
                    ));
                }
            }
        }
        for (name, group) in [
            ("p_e", self.p_e.iter().collect::<Vec<_>>()),
            ("p_z", self.p_z.iter().collect()),
            ("g_e", self.g_e.iter().flatten().collect()),
            ("g_z", self.g_z.iter().flatten().collect()),
            ("h_ref", self.h_ref.iter().collect()),
        ] {
            if let Some(first) = group.first() {
                if first.is_empty() {
                    return Err(AncError::shape(format!("{name} tap count"), ">= 1", 0));
                }
                if let Some(bad) = group.iter().find(|h| h.len() != first.len()) {
                    return Err(AncError::shape(
                        format!("{name} tap count"),
                        first.len(),
                        bad.len(),
                    ));
                }
            }
        }
        for (name, h) in self.all_filters() {
            if let Some(i) = h.iter().position(|v| !v.is_finite()) {
                return Err(AncError::NonFinite { what: name, index: i });
            }
        }
        Ok(())
    }

    /// Short content hash used to tag run metadata.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, h) in self.all_filters() {
            hasher.update(name.as_bytes());
            for v in h {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(&hasher.finalize()[..8])
    }
}
