//! CSV and JSON exports. Floats use Rust's shortest round-trip formatting,
//! so identical results give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::experiment::{mic_id, RunRecord, Summary};
use crate::error::{AncError, Result};
use crate::metrics::{convergence_curve_with_hop, heatmap_table, welch_psd, ExperimentResult, MicSeries};
use crate::scene::MicRole;

const ROLES: [MicRole; 2] = [MicRole::Primary, MicRole::Secondary];

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| AncError::io(path, e))
}

fn samples(seconds: f64, fs: u32) -> usize {
    ((seconds * fs as f64).round() as usize).max(1)
}

/// `t_seconds,mic_id,nr_db`; `t_seconds` is the end of each window.
pub fn convergence_csv(result: &ExperimentResult, window_s: f64, hop_s: f64) -> Result<String> {
    let fs = result.sample_rate_hz;
    let window = samples(window_s, fs).min(result.series.len());
    let hop = samples(hop_s, fs);
    let mut out = String::from("t_seconds,mic_id,nr_db\n");
    for role in ROLES {
        for i in 0..result.series.count(role) {
            let (c, b) = result.series.mic(role, i);
            let id = mic_id(role, i);
            for (start, nr) in convergence_curve_with_hop(c, b, window, hop)? {
                let t = (start + window) as f64 / fs as f64;
                writeln!(out, "{t},{id},{nr}").expect("writing to a String");
            }
        }
    }
    Ok(out)
}

/// `freq_hz,mic_id,psd_db` of each mic's signal over `window`. `baseline`
/// selects the noise-only field instead of the controlled residual.
pub fn psd_csv(
    series: &MicSeries,
    fs: u32,
    window: std::ops::Range<usize>,
    segment: usize,
    overlap: f64,
    baseline: bool,
) -> Result<String> {
    let segment = segment.min(window.len());
    let mut out = String::from("freq_hz,mic_id,psd_db\n");
    for role in ROLES {
        for i in 0..series.count(role) {
            let (c, b) = series.mic(role, i);
            let x = if baseline { b } else { c };
            let psd = welch_psd(&x[window.clone()], fs as f64, segment, overlap)?;
            let id = mic_id(role, i);
            for (f, p) in psd.frequencies_hz.iter().zip(&psd.psd_db) {
                writeln!(out, "{f},{id},{p}").expect("writing to a String");
            }
        }
    }
    Ok(out)
}

pub fn write_exports(config: &ExperimentConfig, runs: &[RunRecord], summary: &Summary) -> Result<()> {
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| AncError::io(out, e))?;
    let m = &config.metrics;
    let mut baseline_written = std::collections::BTreeSet::new();
    for (record, run) in runs.iter().zip(&summary.runs) {
        let Ok(result) = &record.outcome else { continue };
        let dir = out.join(&record.key);
        std::fs::create_dir_all(&dir).map_err(|e| AncError::io(&dir, e))?;
        let fs = result.sample_rate_hz;
        let window = result.steady_state_window(m.steady_state_fraction);

        write_file(
            &dir.join("convergence.csv"),
            &convergence_csv(result, m.convergence_window_s, m.convergence_hop_s)?,
        )?;
        write_file(
            &dir.join("psd.csv"),
            &psd_csv(&result.series, fs, window.clone(), m.psd_segment, m.psd_overlap, false)?,
        )?;
        if baseline_written.insert(record.seed) {
            let off = out.join(format!("anc_off_seed{}", record.seed));
            std::fs::create_dir_all(&off).map_err(|e| AncError::io(&off, e))?;
            write_file(
                &off.join("psd.csv"),
                &psd_csv(&result.series, fs, window.clone(), m.psd_segment, m.psd_overlap, true)?,
            )?;
        }

        let positions: Vec<Option<[f64; 3]>> = ROLES
            .iter()
            .flat_map(|&role| config.room.mic_positions(role, result.series.count(role)))
            .collect();
        let table = heatmap_table(
            run.nr_db
                .iter()
                .zip(positions)
                .map(|(mic, pos)| (pos, mic.role, mic.nr_db.unwrap_or(f64::NAN))),
        );
        write_file(&dir.join("heatmap.csv"), &table.to_csv())?;
    }
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    write_file(&out.join("summary.json"), &(json + "\n"))
}
