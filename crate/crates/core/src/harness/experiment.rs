//! Running every (algorithm, seed) pair of a config and summarising it.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AlgorithmEntry, ExperimentConfig, MetricOptions};
use super::export::write_exports;
use crate::algorithms::{run_controller, Algorithm, ErrorSignal, HyperParams};
use crate::error::{AncError, Result};
use crate::metrics::ExperimentResult;
use crate::scene::{ImpulseResponseSet, MicRole, SceneConfig};

/// Outcome of one controller run.
#[derive(Debug)]
pub struct RunRecord {
    pub key: String,
    pub entry: AlgorithmEntry,
    pub seed: u64,
    pub outcome: std::result::Result<ExperimentResult, AncError>,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicNr {
    pub mic_id: String,
    pub role: MicRole,
    /// `None` when not finite (e.g. perfect cancellation).
    pub nr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub key: String,
    pub label: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub params: HyperParams,
    pub error_signal: ErrorSignal,
    pub update_stride: usize,
    pub secondary_path_error: f64,
    /// Steady-state noise reduction per mic; empty for failed runs.
    pub nr_db: Vec<MicNr>,
    pub mean_primary_nr_db: Option<f64>,
    pub mean_secondary_nr_db: Option<f64>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scene: SceneConfig,
    pub scene_digest: String,
    pub filter_len: usize,
    pub steady_state_fraction: f64,
    pub steady_state_start_s: f64,
    pub mic_ids: Vec<String>,
    pub runs: Vec<RunSummary>,
}

pub fn mic_id(role: MicRole, index: usize) -> String {
    format!("{}{index}", role.prefix())
}

pub fn run_key(label: &str, seed: u64) -> String {
    format!("{label}_seed{seed}")
}

/// Simulate every (algorithm, seed) pair in parallel. All runs with the same
/// seed see the same noise and the same impulse responses.
pub fn simulate_runs(config: &ExperimentConfig, irs: &ImpulseResponseSet) -> Vec<RunRecord> {
    let n = config.scene.n_samples();
    let jobs: Vec<(&AlgorithmEntry, u64)> = config
        .seeds()
        .into_iter()
        .flat_map(|seed| config.algorithms.iter().map(move |a| (a, seed)))
        .collect();
    jobs.into_par_iter()
        .map(|(entry, seed)| {
            let key = run_key(entry.label(), seed);
            info!("{key}: simulating {n} samples");
            let outcome = run_controller(&config.scene, irs, &entry.setup(), n, seed);
            if let Err(e) = &outcome {
                warn!("{key}: {e}");
            }
            RunRecord {
                key,
                entry: entry.clone(),
                seed,
                outcome,
            }
        })
        .collect()
}

fn mean(values: &[Option<f64>]) -> Option<f64> {
    let finite: Option<Vec<f64>> = values.iter().copied().collect();
    finite
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarise_run(record: &RunRecord, metrics: &MetricOptions) -> RunSummary {
    let entry = &record.entry;
    let mut run = RunSummary {
        key: record.key.clone(),
        label: entry.label().to_string(),
        algorithm: entry.name,
        seed: record.seed,
        status: RunStatus::Ok,
        error: None,
        params: entry.params.clone(),
        error_signal: entry.error_signal,
        update_stride: entry.update_stride,
        secondary_path_error: entry.secondary_path_error,
        nr_db: Vec::new(),
        mean_primary_nr_db: None,
        mean_secondary_nr_db: None,
    };
    let result = match &record.outcome {
        Ok(result) => result,
        Err(e) => {
            run.status = match e {
                AncError::Divergence { .. } => RunStatus::Diverged,
                _ => RunStatus::Failed,
            };
            run.error = Some(e.to_string());
            return run;
        }
    };
    for role in [MicRole::Primary, MicRole::Secondary] {
        let nr = match result.steady_state_nr(role, metrics.steady_state_fraction) {
            Ok(nr) => nr,
            Err(e) => {
                run.status = RunStatus::Failed;
                run.error = Some(e.to_string());
                run.nr_db.clear();
                return run;
            }
        };
        let nr: Vec<Option<f64>> = nr.into_iter().map(|v| v.is_finite().then_some(v)).collect();
        match role {
            MicRole::Primary => run.mean_primary_nr_db = mean(&nr),
            MicRole::Secondary => run.mean_secondary_nr_db = mean(&nr),
        }
        run.nr_db.extend(nr.into_iter().enumerate().map(|(i, nr_db)| MicNr {
            mic_id: mic_id(role, i),
            role,
            nr_db,
        }));
    }
    run
}

pub fn summarise(
    config: &ExperimentConfig,
    irs: &ImpulseResponseSet,
    runs: &[RunRecord],
) -> Summary {
    let n = config.scene.n_samples();
    let tail = ((n as f64) * config.metrics.steady_state_fraction).ceil() as usize;
    let mic_ids = (0..irs.n_primary())
        .map(|i| mic_id(MicRole::Primary, i))
        .chain((0..irs.n_secondary()).map(|k| mic_id(MicRole::Secondary, k)))
        .collect();
    Summary {
        scene: config.scene.clone(),
        scene_digest: irs.digest(),
        filter_len: config.scene.filter_len(),
        steady_state_fraction: config.metrics.steady_state_fraction,
        steady_state_start_s: n.saturating_sub(tail) as f64 / config.scene.sample_rate_hz as f64,
        mic_ids,
        runs: runs.iter().map(|r| summarise_run(r, &config.metrics)).collect(),
    }
}

/// Validate, simulate, and write every export under `config.output_dir`.
/// Diverged runs are recorded in the summary; they do not fail the call.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let irs = config.room.build(&config.scene)?;
    let runs = simulate_runs(config, &irs);
    let summary = summarise(config, &irs, &runs);
    write_exports(config, &runs, &summary)?;
    Ok(ExperimentReport { runs, summary })
}
