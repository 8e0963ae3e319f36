//! Independent solver for `min |d_z + X_z w|^2 / 2  s.t.  d_e + X_e w = 0`.
//!
//! When the problem has a unique solution the KKT saddle system
//!
//! ```text
//! [ X_z^T X_z  X_e^T ] [ w  ]   [ -X_z^T d_z ]
//! [ X_e        0     ] [ nu ] = [ -d_e       ]
//! ```
//!
//! is solved by LU. Otherwise the minimum-norm minimiser is built from
//! SVD pseudoinverses: a particular solution in the row space of `X_e` plus
//! the minimum-norm least-squares correction inside its nullspace.

use nalgebra::{DMatrix, DVector};

use crate::error::{AncError, Result};
use crate::linalg::numerical_rank;

const RANK_TOL: f64 = 1e-10;

pub fn oracle_constrained_ls(
    x_e: &DMatrix<f64>,
    x_z: &DMatrix<f64>,
    d_e: &DVector<f64>,
    d_z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let l = x_e.ncols();
    let n_e = x_e.nrows();
    if x_z.ncols() != l || d_e.len() != n_e || d_z.len() != x_z.nrows() {
        return Err(AncError::shape(
            "oracle inputs",
            format!("X_e {n_e}x{l}, X_z Nx{l}, d_e {n_e}, d_z N"),
            format!(
                "X_z {}x{}, d_e {}, d_z {}",
                x_z.nrows(),
                x_z.ncols(),
                d_e.len(),
                d_z.len()
            ),
        ));
    }
    if n_e > l {
        return Err(AncError::Infeasible(format!(
            "{n_e} constraints on {l} unknowns"
        )));
    }

    let (w_p, projector) = if n_e == 0 {
        (DVector::zeros(l), DMatrix::identity(l, l))
    } else {
        let svd = x_e.clone().svd(true, true);
        let rank = numerical_rank(svd.singular_values.as_slice(), RANK_TOL);
        if rank < n_e {
            return Err(AncError::Infeasible(format!(
                "X_e has rank {rank} < {n_e} rows"
            )));
        }
        let tol = RANK_TOL * svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(tol)
            .map_err(|e| AncError::Infeasible(e.to_string()))?;
        let w_p = -(&pinv * d_e);
        let residual = (d_e + x_e * &w_p).norm();
        if residual > 1e-8 * (1.0 + d_e.norm()) {
            return Err(AncError::Infeasible(format!(
                "constraint residual {residual:.3e} after projection"
            )));
        }
        (w_p, DMatrix::identity(l, l) - pinv * x_e)
    };

    if x_z.nrows() == 0 {
        return Ok(w_p);
    }
    // reduced problem over u in null(X_e): min |r + X_z P u|
    let reduced = x_z * &projector;
    let r = d_z + x_z * &w_p;
    let red_svd = reduced.clone().svd(true, true);
    let red_rank = if red_svd.singular_values.is_empty() {
        0
    } else {
        numerical_rank(red_svd.singular_values.as_slice(), RANK_TOL)
    };

    if red_rank == l - n_e {
        // unique minimiser: dense KKT solve
        let n = l + n_e;
        let mut kkt = DMatrix::zeros(n, n);
        kkt.view_mut((0, 0), (l, l)).copy_from(&x_z.tr_mul(x_z));
        kkt.view_mut((0, l), (l, n_e)).copy_from(&x_e.transpose());
        kkt.view_mut((l, 0), (n_e, l)).copy_from(x_e);
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, l).copy_from(&-x_z.tr_mul(d_z));
        rhs.rows_mut(l, n_e).copy_from(&-d_e);
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| AncError::Singular { what: "KKT matrix".into() })?;
        return Ok(sol.rows(0, l).into_owned());
    }

    let tol = RANK_TOL * red_svd.singular_values.max().max(f64::MIN_POSITIVE);
    let u = -red_svd
        .pseudo_inverse(tol)
        .map_err(|e| AncError::Infeasible(e.to_string()))?
        * r;
    // u lies in the row space of X_z P, hence inside null(X_e)
    Ok(w_p + u)
}

/// Residuals of the stationarity and feasibility conditions at `w`, with the
/// multipliers fitted by least squares: `(|X_z^T(d_z + X_z w) + X_e^T nu|, |d_e + X_e w|)`.
pub fn kkt_residual(
    x_e: &DMatrix<f64>,
    x_z: &DMatrix<f64>,
    d_e: &DVector<f64>,
    d_z: &DVector<f64>,
    w: &DVector<f64>,
) -> (f64, f64) {
    let grad = x_z.tr_mul(&(d_z + x_z * w));
    let feasibility = (d_e + x_e * w).norm();
    if x_e.nrows() == 0 {
        return (grad.norm(), feasibility);
    }
    let x_e_t = x_e.transpose();
    let nu = x_e_t
        .clone()
        .svd(true, true)
        .solve(&(-&grad), 1e-12)
        .unwrap_or_else(|_| DVector::zeros(x_e.nrows()));
    ((grad + x_e_t * nu).norm(), feasibility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rvec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn pure_constraint_gives_minimum_norm_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x_e = random(&mut rng, 2, 5);
        let d_e = rvec(&mut rng, 2);
        let w = oracle_constrained_ls(&x_e, &DMatrix::zeros(3, 5), &d_e, &DVector::zeros(3)).unwrap();
        // minimum-norm solution of X_e w = -d_e
        let expected = -x_e.transpose() * (&x_e * x_e.transpose()).try_inverse().unwrap() * &d_e;
        assert!((&w - expected).norm() < 1e-12);
    }

    #[test]
    fn scalar_case_matches_hand_lagrangian() {
        // min (1 + w1)^2/2 + (2 + w2)^2/2  s.t.  c + w1 + w2 = 0
        // stationarity: 1 + w1 + nu = 0, 2 + w2 + nu = 0
        // c = 3: nu = 0, w = (-1, -2);  c = 1: nu = -1, w = (0, -1)
        let x_e = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x_z = DMatrix::identity(2, 2);
        let d_z = DVector::from_vec(vec![1.0, 2.0]);
        let w = oracle_constrained_ls(&x_e, &x_z, &DVector::from_vec(vec![3.0]), &d_z).unwrap();
        assert!((w - DVector::from_vec(vec![-1.0, -2.0])).norm() < 1e-12);
        let w = oracle_constrained_ls(&x_e, &x_z, &DVector::from_vec(vec![1.0]), &d_z).unwrap();
        assert!((w - DVector::from_vec(vec![0.0, -1.0])).norm() < 1e-12);
    }

    #[test]
    fn random_instances_satisfy_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n_e, n_z, l) in [(2, 8, 6), (1, 3, 6), (3, 3, 10), (2, 0, 4)] {
            let x_e = random(&mut rng, n_e, l);
            let x_z = random(&mut rng, n_z, l);
            let d_e = rvec(&mut rng, n_e);
            let d_z = rvec(&mut rng, n_z);
            let w = oracle_constrained_ls(&x_e, &x_z, &d_e, &d_z).unwrap();
            let (stat, feas) = kkt_residual(&x_e, &x_z, &d_e, &d_z, &w);
            assert!(stat <= 1e-9 && feas <= 1e-9, "({n_e},{n_z},{l}): {stat:e} {feas:e}");
        }
    }

    #[test]
    fn rank_deficient_constraints_are_rejected() {
        let x_e = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 2.0, 0.0, 2.0]);
        let err = oracle_constrained_ls(
            &x_e,
            &DMatrix::identity(3, 3),
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::zeros(3),
        )
        .unwrap_err();
        assert!(matches!(err, AncError::Infeasible(_)));
        let too_many = DMatrix::identity(3, 2);
        assert!(oracle_constrained_ls(&too_many, &DMatrix::zeros(1, 2), &DVector::zeros(3), &DVector::zeros(1)).is_err());
    }
}
