//! Adaptive LCMV control in Frost GSC form.
//!
//! Stochastic gradient on the Lagrangian `z^T z / 2 + lambda^T e` gives
//! `w <- w - a (X_z^T z + X_e^T lambda)`. Choosing `lambda` so that the
//! frozen-snapshot error vanishes after the step yields
//! `lambda = -(X_e X_e^T + dI)^-1 (X_e X_z^T z - e / a)`, and the update
//! collapses to `w <- w - a P_c X_z^T z - P_mn e`. The step size cancels
//! from the minimum-norm term.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{check_snapshot, ControllerState, Delta, HyperParams, LagrangeMultipliers};
use crate::error::{AncError, Result};
use crate::filtering::ReferenceSnapshot;
use crate::linalg::spd_factor;

/// Absolute `delta` for this snapshot.
pub fn effective_delta(x_e: &DMatrix<f64>, delta: Delta) -> f64 {
    match delta {
        Delta::Absolute(d) => d,
        Delta::Relative(r) if x_e.nrows() > 0 => r * x_e.norm_squared() / x_e.nrows() as f64,
        Delta::Relative(_) => 0.0,
    }
}

fn constraint_factor(x_e: &DMatrix<f64>, delta: Delta) -> Result<Cholesky<f64, Dyn>> {
    let d = effective_delta(x_e, delta);
    let mut gram = x_e * x_e.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += d;
    }
    spd_factor(gram, "constraint Gram X_e X_e^T + delta I")
}

/// Variance-term step size; normalized by the secondary filtered-reference energy.
fn lcmv_step_size(params: &HyperParams, snap: &ReferenceSnapshot) -> f64 {
    params.step(|| snap.x_z.norm_squared())
}

/// `lambda = -(X_e X_e^T + dI)^-1 (X_e X_z^T z - e / a)`.
pub fn compute_lambda(
    snap: &ReferenceSnapshot,
    z: &[f64],
    e: &[f64],
    params: &HyperParams,
) -> Result<LagrangeMultipliers> {
    check_snapshot(snap, e, Some(z))?;
    let a = lcmv_step_size(params, snap);
    if a <= 0.0 {
        return Err(AncError::Config(
            "lambda is undefined for a zero step size".into(),
        ));
    }
    if e.is_empty() {
        return Ok(LagrangeMultipliers {
            lambda: DVector::zeros(0),
        });
    }
    let chol = constraint_factor(&snap.x_e, params.delta)?;
    let g = snap.x_z.tr_mul(&DVector::from_column_slice(z));
    let rhs = &snap.x_e * g - DVector::from_column_slice(e) / a;
    Ok(LagrangeMultipliers {
        lambda: -chol.solve(&rhs),
    })
}

/// Adaptive LCMV step.
///
/// Evaluated with the scaled multiplier `nu = a * lambda`, which keeps the
/// update defined at `a = 0` (pure minimum-norm constraint correction).
pub fn lcmv_adaptive_update(
    state: &mut ControllerState,
    snap: &ReferenceSnapshot,
    e: &[f64],
    z: &[f64],
) -> Result<()> {
    check_snapshot(snap, e, Some(z))?;
    let a = lcmv_step_size(&state.params, snap);
    let g = snap.x_z.tr_mul(&DVector::from_column_slice(z));
    let mut step = &g * a;
    if !e.is_empty() {
        let chol = constraint_factor(&snap.x_e, state.params.delta)?;
        let rhs = &snap.x_e * &step - DVector::from_column_slice(e);
        let nu = -chol.solve(&rhs);
        step.gemv_tr(1.0, &snap.x_e, &nu, 1.0);
    }
    state.apply_step(&step)
}

/// `P_c = I - X_e^T (X_e X_e^T + dI)^-1 X_e`, materialised as `L x L`.
pub fn projector_kernel(snap: &ReferenceSnapshot, delta: Delta) -> Result<DMatrix<f64>> {
    let l = snap.filter_len();
    let mut p = DMatrix::identity(l, l);
    if snap.x_e.nrows() > 0 {
        let mn = projector_min_norm(snap, delta)?;
        p -= mn * &snap.x_e;
    }
    Ok(p)
}

/// `P_mn = X_e^T (X_e X_e^T + dI)^-1`, `L x N_e`.
pub fn projector_min_norm(snap: &ReferenceSnapshot, delta: Delta) -> Result<DMatrix<f64>> {
    if snap.x_e.nrows() == 0 {
        return Ok(DMatrix::zeros(snap.filter_len(), 0));
    }
    let chol = constraint_factor(&snap.x_e, delta)?;
    // (G^-1 X_e)^T with G symmetric
    Ok(chol.solve(&snap.x_e).transpose())
}

/// Explicit projector form of the LCMV step, `a P_c X_z^T z + P_mn e`.
/// Diagnostic counterpart of [`lcmv_adaptive_update`].
pub fn lcmv_projector_step(
    snap: &ReferenceSnapshot,
    e: &[f64],
    z: &[f64],
    params: &HyperParams,
) -> Result<DVector<f64>> {
    check_snapshot(snap, e, Some(z))?;
    let a = lcmv_step_size(params, snap);
    let g = snap.x_z.tr_mul(&DVector::from_column_slice(z));
    let pc = projector_kernel(snap, params.delta)?;
    let pmn = projector_min_norm(snap, params.delta)?;
    Ok(pc * g * a + pmn * DVector::from_column_slice(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{multi_point_fxlms_update, Algorithm};
    use crate::filtering::FilterLayout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rvec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn lcmv_state(l: usize, params: HyperParams) -> ControllerState {
        ControllerState::new(Algorithm::LcmvAdaptive, FilterLayout::new(1, 1, l), params).unwrap()
    }

    #[test]
    fn zero_errors_leave_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let snap = ReferenceSnapshot {
            x_e: random(&mut rng, 2, 8),
            x_z: random(&mut rng, 3, 8),
            t: 0,
        };
        let mut st = lcmv_state(8, HyperParams::exact(0.1));
        st.weights.w = rvec(&mut rng, 8);
        let before = st.weights.clone();
        lcmv_adaptive_update(&mut st, &snap, &[0.0; 2], &[0.0; 3]).unwrap();
        assert_eq!(st.weights, before);
        let lambda = compute_lambda(&snap, &[0.0; 3], &[0.0; 2], &HyperParams::exact(0.1)).unwrap();
        assert!(lambda.lambda.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_lambda_by_hand() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x_e = random(&mut rng, 1, 5);
        let x_z = random(&mut rng, 2, 5);
        let z = [0.3, -1.2];
        let e = [0.7];
        let (alpha, delta) = (0.25, 0.01);
        let mut p = HyperParams::exact(alpha);
        p.delta = Delta::Absolute(delta);
        let snap = ReferenceSnapshot { x_e: x_e.clone(), x_z: x_z.clone(), t: 0 };
        let got = compute_lambda(&snap, &z, &e, &p).unwrap().lambda[0];

        let mut xz_t_z = [0.0; 5];
        for (i, v) in xz_t_z.iter_mut().enumerate() {
            *v = x_z[(0, i)] * z[0] + x_z[(1, i)] * z[1];
        }
        let cross: f64 = (0..5).map(|i| x_e[(0, i)] * xz_t_z[i]).sum();
        let energy: f64 = (0..5).map(|i| x_e[(0, i)].powi(2)).sum();
        let expected = -(cross - e[0] / alpha) / (energy + delta);
        assert!((got - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn lambda_solves_constraint_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let snap = ReferenceSnapshot {
            x_e: random(&mut rng, 3, 10),
            x_z: random(&mut rng, 4, 10),
            t: 0,
        };
        let z = rvec(&mut rng, 4);
        let e = rvec(&mut rng, 3);
        let alpha = 0.3;
        let lambda = compute_lambda(&snap, z.as_slice(), e.as_slice(), &HyperParams::exact(alpha))
            .unwrap()
            .lambda;
        let residual = &snap.x_e * snap.x_e.transpose() * lambda
            + (&snap.x_e * snap.x_z.transpose() * &z - &e / alpha);
        assert!(residual.norm() < 1e-10);
    }

    #[test]
    fn lambda_form_matches_projector_form_and_kills_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (n_e, n_z, l) = (3, 5, 12);
            let snap = ReferenceSnapshot {
                x_e: random(&mut rng, n_e, l),
                x_z: random(&mut rng, n_z, l),
                t: 0,
            };
            let d_e = rvec(&mut rng, n_e);
            let d_z = rvec(&mut rng, n_z);
            let w0 = rvec(&mut rng, l);
            let e = &d_e + &snap.x_e * &w0;
            let z = &d_z + &snap.x_z * &w0;
            let p = HyperParams::exact(0.07);
            let mut st = lcmv_state(l, p.clone());
            st.weights.w = w0.clone();
            lcmv_adaptive_update(&mut st, &snap, e.as_slice(), z.as_slice()).unwrap();
            let projector = lcmv_projector_step(&snap, e.as_slice(), z.as_slice(), &p).unwrap();
            let lambda_form = &w0 - &st.weights.w;
            assert!((&lambda_form - &projector).norm() < 1e-10);

            let predicted = &d_e + &snap.x_e * &st.weights.w;
            assert!(predicted.norm() < 1e-9, "{predicted}");
        }
    }

    #[test]
    fn no_constraints_reduces_to_variance_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let snap = ReferenceSnapshot {
            x_e: DMatrix::zeros(0, 6),
            x_z: random(&mut rng, 3, 6),
            t: 0,
        };
        let z = rvec(&mut rng, 3);
        let mut a = lcmv_state(6, HyperParams::exact(0.2));
        let mut b = ControllerState::new(
            Algorithm::MultiPointFxlms,
            FilterLayout::new(1, 1, 6),
            HyperParams::exact(0.2),
        )
        .unwrap();
        lcmv_adaptive_update(&mut a, &snap, &[], z.as_slice()).unwrap();
        multi_point_fxlms_update(&mut b, &snap, &[], z.as_slice()).unwrap();
        assert!((&a.weights.w - &b.weights.w).norm() < 1e-15);
    }

    #[test]
    fn projector_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let snap = ReferenceSnapshot {
            x_e: random(&mut rng, 3, 9),
            x_z: random(&mut rng, 2, 9),
            t: 0,
        };
        let exact = Delta::Absolute(0.0);
        let pc = projector_kernel(&snap, exact).unwrap();
        let pmn = projector_min_norm(&snap, exact).unwrap();
        assert!((&pc * snap.x_e.transpose()).norm() < 1e-10);
        assert!((&pc * &pc - &pc).norm() < 1e-10);
        assert!((&snap.x_e * &pmn - DMatrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn zero_constraint_matrix_with_delta_gives_identity() {
        let snap = ReferenceSnapshot {
            x_e: DMatrix::zeros(2, 4),
            x_z: DMatrix::zeros(1, 4),
            t: 0,
        };
        let pc = projector_kernel(&snap, Delta::Absolute(1e-3)).unwrap();
        assert_eq!(pc, DMatrix::identity(4, 4));
    }

    #[test]
    fn rank_deficient_constraints_need_delta() {
        let row = [1.0, 2.0, 0.5, -1.0];
        let snap = ReferenceSnapshot {
            x_e: DMatrix::from_fn(2, 4, |_, j| row[j]),
            x_z: DMatrix::from_element(1, 4, 0.1),
            t: 0,
        };
        let err = compute_lambda(&snap, &[1.0], &[0.5, 0.5], &HyperParams::exact(0.1)).unwrap_err();
        assert!(matches!(err, AncError::Singular { .. }));
        assert!(err.to_string().contains("delta"));
        let mut p = HyperParams::exact(0.1);
        p.delta = Delta::Absolute(1e-6);
        assert!(compute_lambda(&snap, &[1.0], &[0.5, 0.5], &p).is_ok());
    }

    #[test]
    fn zero_step_size_still_corrects_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let snap = ReferenceSnapshot {
            x_e: random(&mut rng, 2, 6),
            x_z: random(&mut rng, 2, 6),
            t: 0,
        };
        let d_e = rvec(&mut rng, 2);
        let mut st = lcmv_state(6, HyperParams::exact(0.0));
        lcmv_adaptive_update(&mut st, &snap, d_e.as_slice(), &[1.0, 1.0]).unwrap();
        assert!((&d_e + &snap.x_e * &st.weights.w).norm() < 1e-12);
        assert!(compute_lambda(&snap, &[1.0, 1.0], d_e.as_slice(), &HyperParams::exact(0.0)).is_err());
    }

    #[test]
    fn relative_delta_scales_with_trace() {
        let x_e = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 0.0]);
        assert_eq!(effective_delta(&x_e, Delta::Relative(0.5)), 0.5 * 6.0 / 2.0);
        assert_eq!(effective_delta(&x_e, Delta::Absolute(0.25)), 0.25);
    }
}
