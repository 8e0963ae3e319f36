//! Per-mic comparison of runs across one or more `summary.json` files.

use std::collections::BTreeMap;

use super::experiment::{RunStatus, Summary};
use crate::error::{AncError, Result};

/// Noise reduction per mic (rows) and run (columns), with deltas against a
/// reference column.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub mic_ids: Vec<String>,
    pub columns: Vec<String>,
    /// `values[mic][column]`; `None` for failed runs or missing mics.
    pub values: Vec<Vec<Option<f64>>>,
    pub reference: usize,
}

impl Comparison {
    /// `value - reference value` for one cell.
    pub fn delta(&self, mic: usize, column: usize) -> Option<f64> {
        Some(self.values[mic][column]? - self.values[mic][self.reference]?)
    }

    pub fn render(&self) -> String {
        let cell = |mic: usize, col: usize| match (self.values[mic][col], col == self.reference) {
            (None, _) => "-".to_string(),
            (Some(v), true) => format!("{v:.2}"),
            (Some(v), false) => match self.delta(mic, col) {
                Some(d) => format!("{v:.2} ({d:+.2})"),
                None => format!("{v:.2}"),
            },
        };
        let mut table: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["mic".to_string()];
        header.extend(self.columns.iter().enumerate().map(|(c, name)| {
            if c == self.reference {
                format!("{name} [ref]")
            } else {
                name.clone()
            }
        }));
        table.push(header);
        for (m, id) in self.mic_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend((0..self.columns.len()).map(|c| cell(m, c)));
            table.push(row);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Build a comparison from `(source name, summary)` pairs. `reference`
/// selects a column by run key or label; the default is the first run.
pub fn compare_summaries(summaries: &[(String, Summary)], reference: Option<&str>) -> Result<Comparison> {
    let mut mic_ids: Vec<String> = Vec::new();
    let mut columns: Vec<(String, String, BTreeMap<String, f64>)> = Vec::new();
    let mut key_count: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, s) in summaries {
        for run in &s.runs {
            *key_count.entry(&run.key).or_default() += 1;
        }
    }
    for (source, s) in summaries {
        for id in &s.mic_ids {
            if !mic_ids.contains(id) {
                mic_ids.push(id.clone());
            }
        }
        for run in &s.runs {
            let name = if key_count[run.key.as_str()] > 1 {
                format!("{source}:{}", run.key)
            } else {
                run.key.clone()
            };
            let values = if run.status == RunStatus::Ok {
                run.nr_db
                    .iter()
                    .filter_map(|m| Some((m.mic_id.clone(), m.nr_db?)))
                    .collect()
            } else {
                BTreeMap::new()
            };
            columns.push((name, run.label.clone(), values));
        }
    }
    if columns.is_empty() {
        return Err(AncError::Config("no runs to compare".into()));
    }
    let reference = match reference {
        None => 0,
        Some(r) => columns
            .iter()
            .position(|(name, label, _)| name == r || label == r || name.ends_with(&format!(":{r}")))
            .ok_or_else(|| AncError::Config(format!("reference run {r:?} not found")))?,
    };
    let values = mic_ids
        .iter()
        .map(|id| columns.iter().map(|(_, _, v)| v.get(id).copied()).collect())
        .collect();
    Ok(Comparison {
        mic_ids,
        columns: columns.into_iter().map(|(name, _, _)| name).collect(),
        values,
        reference,
    })
}
