//! Welch spectra of a primary mic with control off and on, summarised in
//! octave bands.
//!
//!     cargo run --release --example psd_analysis

use std::path::Path;

use lcmv_anc::algorithms::Algorithm;
use lcmv_anc::algorithms::run_controller;
use lcmv_anc::harness::ExperimentConfig;
use lcmv_anc::metrics::welch_psd;

fn main() -> lcmv_anc::Result<()> {
    let mut config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk_scale.json"))?;
    config.scene.duration_s = 8.0;
    let irs = config.room.build(&config.scene)?;
    let fs = config.scene.sample_rate_hz as f64;
    let entry = config.algorithms.iter().find(|a| a.name == Algorithm::LcmvAdaptive).unwrap();
    let result = run_controller(&config.scene, &irs, &entry.setup(), config.scene.n_samples(), 1)?;
    let window = result.steady_state_window(0.25);

    let off = welch_psd(&result.series.d_e[0][window.clone()], fs, 1024, 0.5)?;
    let on = welch_psd(&result.series.e[0][window], fs, 1024, 0.5)?;
    println!("{:>14}  {:>9}  {:>9}  {:>7}", "band (Hz)", "off (dB)", "on (dB)", "NR");
    let mut lo = 62.5;
    while lo < fs / 2.0 {
        let hi = (2.0 * lo).min(fs / 2.0);
        let band = |p: &lcmv_anc::metrics::PsdEstimate| {
            let sum: f64 = p
                .frequencies_hz
                .iter()
                .zip(&p.density)
                .filter(|(f, _)| **f >= lo && **f < hi)
                .map(|(_, d)| d)
                .sum();
            10.0 * (sum * p.bin_width_hz()).log10()
        };
        let (a, b) = (band(&off), band(&on));
        println!("{:>6}-{:<7}  {a:>9.2}  {b:>9.2}  {:>7.2}", lo, hi, a - b);
        lo = hi;
    }
    Ok(())
}
