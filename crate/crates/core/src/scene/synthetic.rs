//! Stochastic exponential-decay room model.
//!
//! Each path is a direct impulse (1/r attenuation, rounded propagation delay)
//! followed, when `rt60_s > 0`, by a Poisson train of Gaussian reflections
//! whose expected energy follows `exp(-6 ln(10) tau / rt60)` after the direct
//! arrival. Total expected tail energy is the Sabine reverberant level
//! `16 pi / A` (relative to the direct energy at 1 m), `A = 0.161 V / rt60`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ImpulseResponseSet, SceneConfig};
use crate::error::{AncError, Result};

/// Distances below this are clamped before the 1/r attenuation.
pub const DISTANCE_FLOOR_M: f64 = 0.1;

fn default_speed_of_sound() -> f64 {
    343.0
}

/// Geometry and reverberation of a synthetic room. Coordinates are meters
/// with the origin at one corner of the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticRoomSpec {
    pub room_dims_m: [f64; 3],
    pub source_position_m: [f64; 3],
    pub speaker_positions_m: Vec<[f64; 3]>,
    pub primary_mic_positions_m: Vec<[f64; 3]>,
    pub secondary_mic_positions_m: Vec<[f64; 3]>,
    /// Reference mic positions. When absent, each reference is the source
    /// signal itself (unit impulse path).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_mic_positions_m: Option<Vec<[f64; 3]>>,
    pub rt60_s: f64,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound_mps: f64,
    pub ir_length_taps: usize,
    pub reflection_density_per_s: f64,
    pub seed: u64,
}

impl SyntheticRoomSpec {
    pub fn validate(&self, config: &SceneConfig) -> Result<()> {
        if self.room_dims_m.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(AncError::Config(format!(
                "room dimensions must be positive, got {:?}",
                self.room_dims_m
            )));
        }
        if !(self.rt60_s.is_finite() && self.rt60_s >= 0.0) {
            return Err(AncError::Config(format!("rt60_s must be >= 0, got {}", self.rt60_s)));
        }
        if !(self.speed_of_sound_mps.is_finite() && self.speed_of_sound_mps > 0.0) {
            return Err(AncError::Config("speed_of_sound_mps must be positive".into()));
        }
        if self.ir_length_taps == 0 {
            return Err(AncError::Config("ir_length_taps must be at least 1".into()));
        }
        if !(self.reflection_density_per_s.is_finite() && self.reflection_density_per_s >= 0.0) {
            return Err(AncError::Config(
                "reflection_density_per_s must be >= 0".into(),
            ));
        }
        let groups: [(&str, &[[f64; 3]], usize); 3] = [
            ("speaker_positions_m", &self.speaker_positions_m, config.n_speakers),
            (
                "primary_mic_positions_m",
                &self.primary_mic_positions_m,
                config.n_primary_mics,
            ),
            (
                "secondary_mic_positions_m",
                &self.secondary_mic_positions_m,
                config.n_secondary_mics,
            ),
        ];
        for (name, positions, expected) in groups {
            if positions.len() != expected {
                return Err(AncError::shape(name, expected, positions.len()));
            }
        }
        if let Some(refs) = &self.reference_mic_positions_m {
            if refs.len() != config.n_refs {
                return Err(AncError::shape(
                    "reference_mic_positions_m",
                    config.n_refs,
                    refs.len(),
                ));
            }
        }
        for (name, p) in self.named_positions() {
            let inside = p
                .iter()
                .zip(&self.room_dims_m)
                .all(|(x, d)| x.is_finite() && *x >= 0.0 && x <= d);
            if !inside {
                return Err(AncError::Config(format!(
                    "{name} at {p:?} lies outside the room {:?}",
                    self.room_dims_m
                )));
            }
        }
        Ok(())
    }

    fn named_positions(&self) -> Vec<(String, [f64; 3])> {
        let mut out = vec![("source".to_string(), self.source_position_m)];
        let groups = [
            ("speaker", &self.speaker_positions_m),
            ("primary mic", &self.primary_mic_positions_m),
            ("secondary mic", &self.secondary_mic_positions_m),
        ];
        for (name, ps) in groups {
            out.extend(ps.iter().enumerate().map(|(i, p)| (format!("{name} {i}"), *p)));
        }
        if let Some(refs) = &self.reference_mic_positions_m {
            out.extend(
                refs.iter()
                    .enumerate()
                    .map(|(i, p)| (format!("reference mic {i}"), *p)),
            );
        }
        out
    }

    fn reverberant_energy(&self) -> f64 {
        let [lx, ly, lz] = self.room_dims_m;
        let volume = lx * ly * lz;
        let absorption_area = 0.161 * volume / self.rt60_s;
        16.0 * std::f64::consts::PI / absorption_area
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct PathBuilder<'a> {
    spec: &'a SyntheticRoomSpec,
    fs: f64,
    tail_energy: f64,
}

impl PathBuilder<'_> {
    fn build(&self, name: String, stream: u64, from: &[f64; 3], to: &[f64; 3]) -> Result<Vec<f64>> {
        let spec = self.spec;
        let dist = distance(from, to);
        let direct_s = dist / spec.speed_of_sound_mps;
        let delay = (direct_s * self.fs).round() as usize;
        if delay >= spec.ir_length_taps {
            return Err(AncError::DelayExceedsLength {
                path: name,
                delay,
                ir_length: spec.ir_length_taps,
            });
        }
        let mut h = vec![0.0; spec.ir_length_taps];
        h[delay] = 1.0 / dist.max(DISTANCE_FLOOR_M);

        if spec.rt60_s > 0.0 && spec.reflection_density_per_s > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(stream);
            let decay_rate = 6.0 * std::f64::consts::LN_10 / spec.rt60_s;
            // per-reflection variance so that the expected tail energy
            // integrates to `tail_energy`
            let scale = self.tail_energy * decay_rate / spec.reflection_density_per_s;
            let gaps = Exp::new(spec.reflection_density_per_s)
                .map_err(|e| AncError::Config(format!("reflection density: {e}")))?;
            let end_s = spec.ir_length_taps as f64 / self.fs;
            let mut t = direct_s;
            loop {
                t += gaps.sample(&mut rng);
                if t >= end_s {
                    break;
                }
                let tap = (t * self.fs).round() as usize;
                let g: f64 = StandardNormal.sample(&mut rng);
                if tap <= delay || tap >= h.len() {
                    continue;
                }
                let tau = t - direct_s;
                h[tap] += g * (scale * (-decay_rate * tau).exp()).sqrt();
            }
        }
        Ok(h)
    }
}

/// Generate every path of a scene from room geometry. Pure in `(spec, config)`.
pub fn generate_synthetic_irs(
    spec: &SyntheticRoomSpec,
    config: &SceneConfig,
) -> Result<ImpulseResponseSet> {
    spec.validate(config)?;
    let builder = PathBuilder {
        spec,
        fs: config.sample_rate_hz as f64,
        tail_energy: if spec.rt60_s > 0.0 {
            spec.reverberant_energy()
        } else {
            0.0
        },
    };
    let src = &spec.source_position_m;
    let mut stream = 0u64;
    let mut next = || {
        stream += 1;
        stream
    };

    let mut p_e = Vec::with_capacity(config.n_primary_mics);
    for (j, mic) in spec.primary_mic_positions_m.iter().enumerate() {
        p_e.push(builder.build(format!("p_e[{j}] (source -> primary mic {j})"), next(), src, mic)?);
    }
    let mut p_z = Vec::with_capacity(config.n_secondary_mics);
    for (k, mic) in spec.secondary_mic_positions_m.iter().enumerate() {
        p_z.push(builder.build(
            format!("p_z[{k}] (source -> secondary mic {k})"),
            next(),
            src,
            mic,
        )?);
    }
    let mut g_e = Vec::with_capacity(config.n_primary_mics);
    for (j, mic) in spec.primary_mic_positions_m.iter().enumerate() {
        let mut row = Vec::with_capacity(config.n_speakers);
        for (s, spk) in spec.speaker_positions_m.iter().enumerate() {
            row.push(builder.build(
                format!("g_e[{j}][{s}] (speaker {s} -> primary mic {j})"),
                next(),
                spk,
                mic,
            )?);
        }
        g_e.push(row);
    }
    let mut g_z = Vec::with_capacity(config.n_secondary_mics);
    for (k, mic) in spec.secondary_mic_positions_m.iter().enumerate() {
        let mut row = Vec::with_capacity(config.n_speakers);
        for (s, spk) in spec.speaker_positions_m.iter().enumerate() {
            row.push(builder.build(
                format!("g_z[{k}][{s}] (speaker {s} -> secondary mic {k})"),
                next(),
                spk,
                mic,
            )?);
        }
        g_z.push(row);
    }
    let h_ref = match &spec.reference_mic_positions_m {
        Some(refs) => Some(
            refs.iter()
                .enumerate()
                .map(|(r, mic)| {
                    builder.build(format!("h_ref[{r}] (source -> reference mic {r})"), next(), src, mic)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    ImpulseResponseSet::new(p_e, p_z, g_e, g_z, h_ref, config.n_refs)
}
