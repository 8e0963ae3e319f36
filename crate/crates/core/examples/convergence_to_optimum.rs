//! Compare the adaptive LCMV steady state with the batch optimum computed
//! from the snapshot statistics of the same run.
//!
//!     cargo run --release --example convergence_to_optimum

use std::path::Path;

use lcmv_anc::algorithms::{run_controller_observed, Algorithm, LcmvStatistics};
use lcmv_anc::harness::ExperimentConfig;
use lcmv_anc::scene::MicRole;

fn main() -> lcmv_anc::Result<()> {
    let config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
    let irs = config.room.build(&config.scene)?;
    let entry = config.algorithms.iter().find(|a| a.name == Algorithm::LcmvAdaptive).unwrap();
    let n = config.scene.n_samples();
    let start = n - n / 4;

    let mut stats = LcmvStatistics::new(config.scene.filter_len());
    let result = run_controller_observed(&config.scene, &irs, &entry.setup(), n, 1, |r| {
        if r.t >= start {
            stats.accumulate(r.snapshot, &r.mics.d_e, &r.mics.d_z);
        }
    })?;

    let mu = stats.equivalent_mu(&entry.params);
    let mut params = entry.params.clone();
    params.mu = mu;
    let w = stats.solve(&params)?;
    println!("matched mu = {mu:.4e}");
    println!(
        "mean z^2: adaptive {:.4e}, batch {:.4e}",
        result.steady_state_mean_square(MicRole::Secondary, 0.25),
        stats.mean_square_z(&w)
    );
    println!(
        "mean e^2: adaptive {:.4e}, batch {:.4e}",
        result.steady_state_mean_square(MicRole::Primary, 0.25),
        stats.mean_square_e(&w)
    );
    for mu in [1e-6, 1e-2, 1e-1, 1.0] {
        params.mu = mu;
        let w = stats.solve(&params)?;
        println!("  mu {mu:.0e}: z^2 {:.4e}, e^2 {:.4e}", stats.mean_square_z(&w), stats.mean_square_e(&w));
    }
    Ok(())
}
