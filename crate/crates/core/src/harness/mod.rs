//! Experiment configuration, execution, export and the command line.
//!
//! An experiment runs every configured algorithm for every noise seed on one
//! scene and writes, under the output directory:
//!
//! ```text
//! summary.json                      per-run, per-mic steady-state NR
//! <label>_seed<seed>/convergence.csv
//! <label>_seed<seed>/psd.csv
//! <label>_seed<seed>/heatmap.csv
//! anc_off_seed<seed>/psd.csv        noise-only field
//! ```

mod cli;
mod compare;
mod config;
mod experiment;
mod export;

pub use cli::cli_main;
pub use compare::{compare_summaries, Comparison};
pub use config::{AlgorithmEntry, Dimensions, ExperimentConfig, MetricOptions, RoomSource};
pub use experiment::{
    mic_id, run_experiment, run_key, simulate_runs, summarise, ExperimentReport, MicNr,
    RunRecord, RunStatus, RunSummary, Summary,
};
pub use export::{convergence_csv, psd_csv, write_exports};
