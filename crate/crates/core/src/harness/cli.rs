//! Command line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use super::compare::compare_summaries;
use super::config::{ExperimentConfig, RoomSource};
use super::experiment::{run_experiment, RunStatus, Summary};
use crate::error::{AncError, Result};
use crate::scene::{generate_synthetic_irs, write_ir_set, SceneConfig};

#[derive(Debug, Parser)]
#[command(name = "lcmv-anc", version, about = "Multichannel active noise control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every algorithm and seed of an experiment config and write exports.
    Run { config: PathBuf },
    /// Generate synthetic impulse responses and write them as an IR manifest.
    GenIrs {
        /// JSON with "scene" and "room": {"synthetic": {...}} (an experiment
        /// config works).
        spec: PathBuf,
        /// Output directory.
        out: PathBuf,
    },
    /// Check a config without simulating and print the problem dimensions.
    Validate { config: PathBuf },
    /// Tabulate per-mic noise reduction of runs from summary files.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Run key or label used as the reference column.
        #[arg(long)]
        reference: Option<String>,
    },
}

#[derive(Deserialize)]
struct IrSpec {
    scene: SceneConfig,
    room: RoomSource,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| AncError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| AncError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    let print = |out: &mut dyn Write, text: String| {
        out.write_all(text.as_bytes())
            .map_err(|e| AncError::io("<stdout>", e))
    };
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let report = run_experiment(&config)?;
            for run in &report.summary.runs {
                let line = match run.status {
                    RunStatus::Ok => format!(
                        "{}: primary {} dB, secondary {} dB\n",
                        run.key,
                        fmt_db(run.mean_primary_nr_db),
                        fmt_db(run.mean_secondary_nr_db)
                    ),
                    _ => format!(
                        "{}: {:?}: {}\n",
                        run.key,
                        run.status,
                        run.error.as_deref().unwrap_or("")
                    ),
                };
                print(out, line)?;
            }
            print(out, format!("wrote {}\n", config.output_dir.join("summary.json").display()))
        }
        Command::GenIrs { spec, out: dir } => {
            let spec: IrSpec = read_json(&spec)?;
            let RoomSource::Synthetic(room) = &spec.room else {
                return Err(AncError::Config(
                    "gen-irs needs a synthetic room, not a manifest".into(),
                ));
            };
            spec.scene.validate()?;
            let irs = generate_synthetic_irs(room, &spec.scene)?;
            let manifest = write_ir_set(&irs, &dir, Some(spec.scene.sample_rate_hz))?;
            print(out, format!("wrote {} (digest {})\n", manifest.display(), irs.digest()))
        }
        Command::Validate { config } => {
            let config = ExperimentConfig::load(&config)?;
            let dims = config.validate()?;
            config.room.build(&config.scene)?;
            print(
                out,
                format!(
                    "ok: L = {} (N_s = {}, N_r = {}, N_t = {}), N_e = {}, N_z = {}, {} samples, {} run(s)\n",
                    dims.filter_len,
                    dims.n_speakers,
                    dims.n_refs,
                    dims.filter_taps,
                    dims.n_primary,
                    dims.n_secondary,
                    dims.n_samples,
                    config.algorithms.len() * config.seeds().len()
                ),
            )
        }
        Command::Compare { summaries, reference } => {
            let loaded = summaries
                .iter()
                .enumerate()
                .map(|(i, p)| Ok(((i + 1).to_string(), read_json::<Summary>(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let table = compare_summaries(&loaded, reference.as_deref())?;
            if table.columns.iter().any(|c| c.contains(':')) {
                for (i, p) in summaries.iter().enumerate() {
                    print(out, format!("{}: {}\n", i + 1, p.display()))?;
                }
            }
            print(out, table.render())
        }
    }
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.2}"))
}

/// Parse `args` (including the program name) and run the command. Returns
/// the process exit code: 0 on success, 1 on errors, 2 on usage errors.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
