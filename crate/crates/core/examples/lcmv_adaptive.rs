//! Adaptive LCMV control: one step on a frozen snapshot, then a full run.
//!
//!     cargo run --release --example lcmv_adaptive

use std::path::Path;

use lcmv_anc::algorithms::{
    compute_lambda, run_controller, Algorithm, ControllerState, Delta, HyperParams,
};
use lcmv_anc::filtering::{FilterLayout, ReferenceSnapshot};
use lcmv_anc::harness::ExperimentConfig;
use lcmv_anc::scene::MicRole;
use nalgebra::{DMatrix, DVector};

fn main() -> lcmv_anc::Result<()> {
    // A hand-made snapshot: 2 constraints, 3 secondary mics, 6 weights.
    let layout = FilterLayout::new(2, 1, 3);
    let snap = ReferenceSnapshot {
        x_e: DMatrix::from_row_slice(2, 6, &[1.0, 0.2, 0.0, 0.5, 0.1, 0.0, 0.0, 0.3, 1.0, 0.0, 0.4, 0.2]),
        x_z: DMatrix::from_fn(3, 6, |i, j| ((i + 2 * j) % 5) as f64 * 0.25 - 0.5),
        t: 0,
    };
    let d_e = DVector::from_vec(vec![0.8, -0.3]);
    let z = [0.4, -0.1, 0.7];

    let params = HyperParams::exact(0.1);
    let mut state = ControllerState::new(Algorithm::LcmvAdaptive, layout, params.clone())?;
    let e: Vec<f64> = (&d_e + &snap.x_e * &state.weights.w).iter().copied().collect();
    let lambda = compute_lambda(&snap, &z, &e, &params)?;
    state.update(&snap, &e, &z)?;
    let after = &d_e + &snap.x_e * &state.weights.w;
    println!("lambda = {:?}", lambda.lambda.as_slice());
    println!("predicted primary error before {e:?}, after {:?}", after.as_slice());

    // The same controller on the desk scene.
    let mut config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
    config.scene.duration_s = 8.0;
    let irs = config.room.build(&config.scene)?;
    let entry = config.algorithms.iter().find(|a| a.name == Algorithm::LcmvAdaptive).unwrap();
    let Delta::Relative(r) = entry.params.delta else { unreachable!() };
    println!("desk scene, alpha = {}, relative delta = {r}", entry.params.alpha);
    let result = run_controller(&config.scene, &irs, &entry.setup(), config.scene.n_samples(), 1)?;
    for role in [MicRole::Primary, MicRole::Secondary] {
        let nr = result.steady_state_nr(role, 0.25)?;
        let mean = nr.iter().sum::<f64>() / nr.len() as f64;
        println!("  {role:?}: mean NR {mean:.2} dB over {} mics", nr.len());
    }
    Ok(())
}
