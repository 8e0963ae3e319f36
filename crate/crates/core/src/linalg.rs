use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{AncError, Result};

/// Pivots below this fraction of the largest diagonal entry count as singular.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Cholesky factorization of a symmetric positive definite matrix, rejecting
/// numerically singular inputs.
pub(crate) fn spd_factor(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let scale = m.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let singular = || AncError::Singular { what: what.into() };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(singular());
    }
    let chol = Cholesky::new(m).ok_or_else(singular)?;
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= PIVOT_TOLERANCE * scale) {
        return Err(singular());
    }
    Ok(chol)
}

/// Relative singular-value cutoff for rank decisions.
pub(crate) fn numerical_rank(singular_values: &[f64], rel_tol: f64) -> usize {
    let max = singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    singular_values
        .iter()
        .filter(|&&s| s > rel_tol * max && s > 0.0)
        .count()
}
