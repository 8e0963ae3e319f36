//! Two-point and multi-point FxLMS on the desk scene.
//!
//!     cargo run --release --example fxlms_baselines

use std::path::Path;

use lcmv_anc::algorithms::{run_controller, Algorithm};
use lcmv_anc::harness::ExperimentConfig;
use lcmv_anc::scene::MicRole;

fn main() -> lcmv_anc::Result<()> {
    let mut config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
    config.scene.duration_s = 8.0;
    let irs = config.room.build(&config.scene)?;
    let n = config.scene.n_samples();

    for entry in config.algorithms.iter().filter(|a| a.name != Algorithm::LcmvAdaptive) {
        let result = run_controller(&config.scene, &irs, &entry.setup(), n, config.scene.seed)?;
        let e = result.steady_state_nr(MicRole::Primary, 0.25)?;
        let z = result.steady_state_nr(MicRole::Secondary, 0.25)?;
        println!("{}", entry.name);
        println!("  primary NR   {:?}", e.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
        println!("  secondary NR {:?}", z.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    }
    Ok(())
}
