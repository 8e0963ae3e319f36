//! JSON manifest + raw f32le payloads for measured or exported IR sets.
//!
//! ```json
//! {
//!   "sample_rate_hz": 48000,
//!   "n_speakers": 31, "n_refs": 1, "n_primary_mics": 2, "n_secondary_mics": 60,
//!   "paths": {
//!     "p_e": { "shape": [2, 4096], "dtype": "f32le", "file": "p_e.f32" },
//!     "p_z": { "shape": [60, 4096], "dtype": "f32le", "file": "p_z.f32" },
//!     "g_e": { "shape": [2, 31, 4096], "dtype": "f32le", "file": "g_e.f32" },
//!     "g_z": { "shape": [60, 31, 4096], "dtype": "f32le", "file": "g_z.f32" }
//!   }
//! }
//! ```
//!
//! Payloads are row-major with the tap index fastest. `h_ref` is optional
//! (shape `[N_r, taps]`); without it every reference is the source signal.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::noise::{read_f32le, write_f32le};
use super::ImpulseResponseSet;
use crate::error::{AncError, Result};

pub const DTYPE_F32LE: &str = "f32le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayRef {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_speakers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_refs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_primary_mics: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_secondary_mics: Option<usize>,
    pub paths: BTreeMap<String, ArrayRef>,
}

const GROUPS: [&str; 5] = ["p_e", "p_z", "g_e", "g_z", "h_ref"];

struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    fn rows(&self) -> Vec<Vec<f64>> {
        let taps = *self.shape.last().unwrap();
        self.data.chunks(taps).map(<[f64]>::to_vec).collect()
    }

    fn rows_by_speaker(&self) -> Vec<Vec<Vec<f64>>> {
        let n_s = self.shape[1];
        let rows = self.rows();
        rows.chunks(n_s).map(<[Vec<f64>]>::to_vec).collect()
    }
}

fn load_array(base: &Path, name: &str, entry: &ArrayRef, rank: usize) -> Result<Array> {
    if entry.dtype != DTYPE_F32LE {
        return Err(AncError::Config(format!(
            "path group {name}: unsupported dtype {:?} (expected {DTYPE_F32LE:?})",
            entry.dtype
        )));
    }
    if entry.shape.len() != rank || entry.shape.contains(&0) {
        return Err(AncError::shape(
            format!("{name} declared shape"),
            format!("{rank} nonzero dims"),
            format!("{:?}", entry.shape),
        ));
    }
    let path = base.join(&entry.file);
    let data = read_f32le(&path)?;
    let expected: usize = entry.shape.iter().product();
    if data.len() != expected {
        return Err(AncError::shape(
            format!("{name} payload {}", path.display()),
            format!("{expected} values for shape {:?}", entry.shape),
            format!("{} values", data.len()),
        ));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        let mut rest = i;
        let mut idx = vec![0; rank];
        for (d, &n) in entry.shape.iter().enumerate().rev() {
            idx[d] = rest % n;
            rest /= n;
        }
        let rows: String = idx[..rank - 1].iter().map(|k| format!("[{k}]")).collect();
        return Err(AncError::NonFinite {
            what: format!("{name}{rows} tap {} ({})", idx[rank - 1], path.display()),
            index: i,
        });
    }
    Ok(Array {
        shape: entry.shape.clone(),
        data,
    })
}

fn check_count(what: &str, declared: Option<usize>, found: usize) -> Result<()> {
    match declared {
        Some(n) if n != found => Err(AncError::shape(what, n, found)),
        _ => Ok(()),
    }
}

/// Load and validate an IR set from a JSON manifest. Payload paths are
/// relative to the manifest's directory.
pub fn load_ir_set(manifest_path: &Path) -> Result<ImpulseResponseSet> {
    let text = fs::read_to_string(manifest_path).map_err(|e| AncError::io(manifest_path, e))?;
    let manifest: IrManifest = serde_json::from_str(&text).map_err(|e| AncError::Json {
        path: manifest_path.to_path_buf(),
        source: e,
    })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    if let Some(unknown) = manifest.paths.keys().find(|k| !GROUPS.contains(&k.as_str())) {
        return Err(AncError::Config(format!(
            "unknown path group {unknown:?} (expected one of {GROUPS:?})"
        )));
    }
    let get = |name: &str| {
        manifest
            .paths
            .get(name)
            .ok_or_else(|| AncError::Config(format!("manifest is missing path group {name:?}")))
    };

    let p_e = load_array(base, "p_e", get("p_e")?, 2)?;
    let p_z = load_array(base, "p_z", get("p_z")?, 2)?;
    let g_e = load_array(base, "g_e", get("g_e")?, 3)?;
    let g_z = load_array(base, "g_z", get("g_z")?, 3)?;
    let h_ref = manifest
        .paths
        .get("h_ref")
        .map(|entry| load_array(base, "h_ref", entry, 2))
        .transpose()?;

    check_count("p_e rows vs n_primary_mics", manifest.n_primary_mics, p_e.shape[0])?;
    check_count("g_e rows vs n_primary_mics", manifest.n_primary_mics, g_e.shape[0])?;
    check_count("p_z rows vs n_secondary_mics", manifest.n_secondary_mics, p_z.shape[0])?;
    check_count("g_z rows vs n_secondary_mics", manifest.n_secondary_mics, g_z.shape[0])?;
    check_count("g_e speakers vs n_speakers", manifest.n_speakers, g_e.shape[1])?;
    check_count("g_z speakers vs n_speakers", manifest.n_speakers, g_z.shape[1])?;
    if g_e.shape[1] != g_z.shape[1] {
        return Err(AncError::shape("g_z speaker count", g_e.shape[1], g_z.shape[1]));
    }
    let n_refs = match &h_ref {
        Some(h) => {
            check_count("h_ref rows vs n_refs", manifest.n_refs, h.shape[0])?;
            h.shape[0]
        }
        None => manifest.n_refs.unwrap_or(1),
    };

    ImpulseResponseSet::new(
        p_e.rows(),
        p_z.rows(),
        g_e.rows_by_speaker(),
        g_z.rows_by_speaker(),
        h_ref.map(|h| h.rows()),
        n_refs,
    )
}

/// Write `irs` as a manifest plus payload files into `dir`. Returns the
/// manifest path.
pub fn write_ir_set(
    irs: &ImpulseResponseSet,
    dir: &Path,
    sample_rate_hz: Option<u32>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| AncError::io(dir, e))?;
    let mut paths = BTreeMap::new();
    let mut put = |name: &str, shape: Vec<usize>, data: Vec<f64>| -> Result<()> {
        let file = PathBuf::from(format!("{name}.f32"));
        write_f32le(&dir.join(&file), &data)?;
        paths.insert(
            name.to_string(),
            ArrayRef {
                shape,
                dtype: DTYPE_F32LE.to_string(),
                file,
            },
        );
        Ok(())
    };
    let taps = |rows: &[Vec<f64>]| rows.first().map_or(1, Vec::len);
    let n_s = irs.n_speakers();

    put("p_e", vec![irs.n_primary(), taps(&irs.p_e)], irs.p_e.concat())?;
    put("p_z", vec![irs.n_secondary(), taps(&irs.p_z)], irs.p_z.concat())?;
    let g_e_taps = irs.g_e.first().map_or(1, |r| taps(r));
    put(
        "g_e",
        vec![irs.n_primary(), n_s, g_e_taps],
        irs.g_e.iter().flatten().flatten().copied().collect(),
    )?;
    let g_z_taps = irs.g_z.first().map_or(1, |r| taps(r));
    put(
        "g_z",
        vec![irs.n_secondary(), n_s, g_z_taps],
        irs.g_z.iter().flatten().flatten().copied().collect(),
    )?;
    put("h_ref", vec![irs.n_refs(), taps(&irs.h_ref)], irs.h_ref.concat())?;

    let manifest = IrManifest {
        sample_rate_hz,
        n_speakers: Some(n_s),
        n_refs: Some(irs.n_refs()),
        n_primary_mics: Some(irs.n_primary()),
        n_secondary_mics: Some(irs.n_secondary()),
        paths,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| AncError::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, text + "\n").map_err(|e| AncError::io(&path, e))?;
    Ok(path)
}
