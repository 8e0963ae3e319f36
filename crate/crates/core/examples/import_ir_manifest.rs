//! Run a controller on impulse responses loaded from an IR manifest, as one
//! would with converted measurements.
//!
//!     cargo run --release --example import_ir_manifest -- <manifest.json>
//!
//! Without an argument a manifest is first written from the desk scene.

use std::path::{Path, PathBuf};

use lcmv_anc::algorithms::{run_controller, Algorithm, ControllerSetup, HyperParams};
use lcmv_anc::harness::ExperimentConfig;
use lcmv_anc::scene::{load_ir_set, write_ir_set, MicRole, NoiseSpec, SceneConfig};

fn main() -> lcmv_anc::Result<()> {
    let manifest = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
            let irs = config.room.build(&config.scene)?;
            write_ir_set(&irs, &std::env::temp_dir().join("lcmv_anc_import"), Some(8000))?
        }
    };
    let irs = load_ir_set(&manifest)?;
    println!(
        "{}: N_e = {}, N_z = {}, N_s = {}, {} taps",
        manifest.display(),
        irs.n_primary(),
        irs.n_secondary(),
        irs.n_speakers(),
        irs.max_len()
    );

    let scene = SceneConfig {
        sample_rate_hz: 8000,
        n_speakers: irs.n_speakers(),
        n_refs: irs.n_refs(),
        n_primary_mics: irs.n_primary(),
        n_secondary_mics: irs.n_secondary(),
        filter_taps: 32,
        duration_s: 4.0,
        noise: NoiseSpec::GaussianWhite { variance: 1.0 },
        seed: 1,
    };
    let params = HyperParams { alpha: 0.2, ..Default::default() };
    let setup = ControllerSetup::new(Algorithm::TwoPointFxlms, params);
    let result = run_controller(&scene, &irs, &setup, scene.n_samples(), scene.seed)?;
    println!("two-point primary NR {:?}", result.steady_state_nr(MicRole::Primary, 0.25)?);
    Ok(())
}
