//! Batch LCMV closed form against the KKT oracle, and the primary/secondary
//! trade-off as the constraint weight 1/mu is relaxed.
//!
//!     cargo run --example batch_lcmv

use lcmv_anc::algorithms::{batch_lcmv_solve, kkt_residual, oracle_constrained_ls, HyperParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lcmv_anc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (l, n_e, n_z) = (10, 2, 40);
    let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let x_e = draw(n_e, l);
    let x_z = draw(n_z, l);
    let d_e = DVector::from_column_slice(draw(n_e, 1).as_slice());
    let d_z = DVector::from_column_slice(draw(n_z, 1).as_slice());

    let oracle = oracle_constrained_ls(&x_e, &x_z, &d_e, &d_z)?;
    let (stat, feas) = kkt_residual(&x_e, &x_z, &d_e, &d_z, &oracle);
    println!("oracle: |z|^2 = {:.4}, KKT residuals {stat:.1e} / {feas:.1e}", (&d_z + &x_z * &oracle).norm_squared());

    println!("{:>8}  {:>10}  {:>10}  {:>12}", "mu", "|e|^2", "|z|^2", "|w - oracle|");
    for mu in [1e-10, 1e-4, 1e-2, 1e-1, 1.0, 10.0] {
        let mut p = HyperParams::exact(0.0);
        p.epsilon = 1e-10;
        p.mu = mu;
        let w = batch_lcmv_solve(&x_e, &x_z, &d_e, &d_z, &p)?;
        println!(
            "{mu:>8.0e}  {:>10.3e}  {:>10.4}  {:>12.2e}",
            (&d_e + &x_e * &w).norm_squared(),
            (&d_z + &x_z * &w).norm_squared(),
            (&w - &oracle).norm()
        );
    }
    Ok(())
}
