use nalgebra::DVector;

use super::{check_snapshot, ControllerState};
use crate::error::{AncError, Result};
use crate::filtering::ReferenceSnapshot;

/// `w <- w - a X_e^T e`; with normalization `a = alpha / (|X_e|_F^2 + floor)`.
pub fn two_point_fxlms_update(
    state: &mut ControllerState,
    snap: &ReferenceSnapshot,
    e: &[f64],
) -> Result<()> {
    check_snapshot(snap, e, None)?;
    let a = state.params.step(|| snap.x_e.norm_squared());
    let e = DVector::from_column_slice(e);
    let step = snap.x_e.tr_mul(&e) * a;
    state.apply_step(&step)
}

/// `w <- w - a (X_e^T e + X_z^T z)`, optionally with per-mic weights;
/// normalization divides by `|X_e|_F^2 + |X_z|_F^2 + floor`.
pub fn multi_point_fxlms_update(
    state: &mut ControllerState,
    snap: &ReferenceSnapshot,
    e: &[f64],
    z: &[f64],
) -> Result<()> {
    check_snapshot(snap, e, Some(z))?;
    let a = state
        .params
        .step(|| snap.x_e.norm_squared() + snap.x_z.norm_squared());
    let mut e = DVector::from_column_slice(e);
    let mut z = DVector::from_column_slice(z);
    if let Some(weights) = &state.params.mic_weights {
        if weights.len() != e.len() + z.len() {
            return Err(AncError::shape(
                "mic_weights",
                e.len() + z.len(),
                weights.len(),
            ));
        }
        let (we, wz) = weights.split_at(e.len());
        e.iter_mut().zip(we).for_each(|(v, w)| *v *= w);
        z.iter_mut().zip(wz).for_each(|(v, w)| *v *= w);
    }
    let mut step = snap.x_e.tr_mul(&e);
    step.gemv_tr(1.0, &snap.x_z, &z, 1.0);
    step *= a;
    state.apply_step(&step)
}
