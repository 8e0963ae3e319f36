//! Run the default experiment (all three controllers), write its exports and
//! print the per-mic comparison against multi-point FxLMS.
//!
//!     cargo run --release --example compare_algorithms -- [out_dir]

use std::path::Path;

use lcmv_anc::harness::{compare_summaries, run_experiment, ExperimentConfig};

fn main() -> lcmv_anc::Result<()> {
    let mut config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
    if let Some(out) = std::env::args().nth(1) {
        config.output_dir = out.into();
    }
    let report = run_experiment(&config)?;
    let table = compare_summaries(&[("desk".into(), report.summary)], Some("multi_point_fxlms"))?;
    print!("{}", table.render());
    println!("exports in {}", config.output_dir.display());
    Ok(())
}
