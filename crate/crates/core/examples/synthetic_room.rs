//! Generate the default desk scene's impulse responses and write them as an
//! IR manifest.
//!
//!     cargo run --example synthetic_room -- [out_dir]

use std::path::{Path, PathBuf};

use lcmv_anc::harness::{ExperimentConfig, RoomSource};
use lcmv_anc::scene::{generate_synthetic_irs, write_ir_set, MicRole};

fn main() -> lcmv_anc::Result<()> {
    let config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
    let RoomSource::Synthetic(room) = &config.room else {
        unreachable!("the default config is synthetic")
    };
    let irs = generate_synthetic_irs(room, &config.scene)?;

    let first_tap = |h: &[f64]| h.iter().position(|v| *v != 0.0).unwrap_or(0);
    let energy = |h: &[f64]| h.iter().map(|v| v * v).sum::<f64>();
    for role in [MicRole::Primary, MicRole::Secondary] {
        let n = match role {
            MicRole::Primary => irs.n_primary(),
            MicRole::Secondary => irs.n_secondary(),
        };
        for m in 0..n {
            let p = irs.primary_path(role, m);
            let g0 = irs.secondary_path(role, m, 0);
            println!(
                "{}{m}: source delay {:3} taps, energy {:.3}; speaker 0 delay {:3} taps, energy {:.3}",
                role.prefix(),
                first_tap(p),
                energy(p),
                first_tap(g0),
                energy(g0)
            );
        }
    }

    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lcmv_anc_desk_irs"));
    let manifest = write_ir_set(&irs, &out, Some(config.scene.sample_rate_hz))?;
    println!("digest {} -> {}", irs.digest(), manifest.display());
    Ok(())
}
