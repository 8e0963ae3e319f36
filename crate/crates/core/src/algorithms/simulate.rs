//! Per-sample closed-loop simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Algorithm, ControllerState, HyperParams};
use crate::error::{AncError, Result};
use crate::filtering::{
    assemble_snapshot, control_output, modelled_control, propagate_sample, reference_step,
    DelayLineBank, FilterWeights, MicSample, ReferenceSnapshot,
};
use crate::metrics::{ExperimentResult, MicSeries, RunMetadata};
use crate::scene::{generate_noise, ImpulseResponseSet, MicRole, SceneConfig};

/// Which primary/secondary error the update sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSignal {
    /// `d_hat + X[t] w[t]`, where `d_hat = e - sum_s g_hat * y_s` removes the
    /// modelled control contribution from the measurement. Keeps the
    /// secondary-path delay out of the adaptation loop.
    #[default]
    Reconstructed,
    /// The raw microphone signals.
    Measured,
}

fn default_stride() -> usize {
    1
}

/// An algorithm plus the loop options it runs with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSetup {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub params: HyperParams,
    #[serde(default)]
    pub error_signal: ErrorSignal,
    /// Update every `update_stride` samples.
    #[serde(default = "default_stride")]
    pub update_stride: usize,
    /// Relative standard deviation of the Gaussian error injected into the
    /// secondary-path model (0 = exact model).
    #[serde(default)]
    pub secondary_path_error: f64,
}

impl ControllerSetup {
    pub fn new(algorithm: Algorithm, params: HyperParams) -> Self {
        ControllerSetup {
            algorithm,
            params,
            error_signal: ErrorSignal::default(),
            update_stride: 1,
            secondary_path_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.update_stride == 0 {
            return Err(AncError::Config("update_stride must be at least 1".into()));
        }
        if !(self.secondary_path_error.is_finite() && self.secondary_path_error >= 0.0) {
            return Err(AncError::Config("secondary_path_error must be >= 0".into()));
        }
        Ok(())
    }
}

/// What an observer sees after each sample.
pub struct StepRecord<'a> {
    pub t: usize,
    pub snapshot: &'a ReferenceSnapshot,
    pub mics: &'a MicSample,
    /// Weights after this sample's update (if any).
    pub weights: &'a FilterWeights,
    pub updated: bool,
}

/// Samples before the first update: `max(N_t, longest IR)`.
pub fn warmup_len(scene: &SceneConfig, irs: &ImpulseResponseSet) -> usize {
    scene.filter_taps.max(irs.max_len())
}

/// Copy of `irs` whose speaker paths carry seeded Gaussian errors of
/// relative size `relative` (scaled by each path's RMS).
pub fn perturb_secondary_paths(
    irs: &ImpulseResponseSet,
    relative: f64,
    seed: u64,
) -> ImpulseResponseSet {
    let mut out = irs.clone();
    if relative == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for h in out.g_e.iter_mut().chain(out.g_z.iter_mut()).flatten() {
        let rms = (h.iter().map(|v| v * v).sum::<f64>() / h.len() as f64).sqrt();
        for v in h.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v += relative * rms * n;
        }
    }
    out
}

/// Run one controller over `n_samples` of noise drawn with `seed`.
pub fn run_controller(
    scene: &SceneConfig,
    irs: &ImpulseResponseSet,
    controller: &ControllerSetup,
    n_samples: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    run_controller_observed(scene, irs, controller, n_samples, seed, |_| {})
}

/// [`run_controller`] with a callback after every sample.
pub fn run_controller_observed(
    scene: &SceneConfig,
    irs: &ImpulseResponseSet,
    controller: &ControllerSetup,
    n_samples: usize,
    seed: u64,
    mut observer: impl FnMut(&StepRecord<'_>),
) -> Result<ExperimentResult> {
    scene.validate()?;
    scene.check_irs(irs)?;
    controller.validate()?;
    let noise = generate_noise(&scene.noise, n_samples, seed)?;
    let estimate = perturb_secondary_paths(irs, controller.secondary_path_error, seed ^ 0x5eed);

    let mut bank = DelayLineBank::new(irs, &estimate, scene.filter_taps);
    let layout = bank.layout();
    let mut state = ControllerState::new(controller.algorithm, layout, controller.params.clone())?;
    let mut snap = ReferenceSnapshot::zeros(irs.n_primary(), irs.n_secondary(), layout);
    let mut y = vec![0.0; layout.n_speakers];
    let warmup = warmup_len(scene, irs);

    let mut series = MicSeries::with_capacity(irs.n_primary(), irs.n_secondary(), n_samples);
    let mut e_hat = vec![0.0; irs.n_primary()];
    let mut z_hat = vec![0.0; irs.n_secondary()];

    for (t, &d_t) in noise.iter().enumerate() {
        reference_step(irs, d_t, &mut bank);
        control_output(&state.weights, &bank, &mut y);
        let mics = propagate_sample(irs, d_t, &y, &mut bank).clone();
        assemble_snapshot(&estimate, &mut bank, t, &mut snap);
        series.push(&mics);

        let update = t >= warmup && (t - warmup).is_multiple_of(controller.update_stride);
        if update {
            match controller.error_signal {
                ErrorSignal::Measured => {
                    e_hat.copy_from_slice(&mics.e);
                    z_hat.copy_from_slice(&mics.z);
                }
                ErrorSignal::Reconstructed => {
                    let xw_e = &snap.x_e * &state.weights.w;
                    let xw_z = &snap.x_z * &state.weights.w;
                    for (j, v) in e_hat.iter_mut().enumerate() {
                        let d_hat = mics.e[j] - modelled_control(&estimate, MicRole::Primary, j, &bank);
                        *v = d_hat + xw_e[j];
                    }
                    for (k, v) in z_hat.iter_mut().enumerate() {
                        let d_hat =
                            mics.z[k] - modelled_control(&estimate, MicRole::Secondary, k, &bank);
                        *v = d_hat + xw_z[k];
                    }
                }
            }
            state.update(&snap, &e_hat, &z_hat)?;
        }
        observer(&StepRecord {
            t,
            snapshot: &snap,
            mics: &mics,
            weights: &state.weights,
            updated: update,
        });
    }

    Ok(ExperimentResult {
        series,
        sample_rate_hz: scene.sample_rate_hz,
        metadata: RunMetadata {
            algorithm: controller.algorithm,
            params: controller.params.clone(),
            error_signal: controller.error_signal,
            update_stride: controller.update_stride,
            secondary_path_error: controller.secondary_path_error,
            seed,
            scene_digest: irs.digest(),
            n_samples,
            warmup,
            filter_taps: scene.filter_taps,
        },
        final_weights: state.weights.w.iter().copied().collect(),
    })
}
