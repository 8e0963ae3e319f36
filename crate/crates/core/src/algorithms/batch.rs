//! Closed-form regularised LCMV solution.
//!
//! ```text
//! A     = (X_z^T X_z + eps I)^-1
//! w_opt = A X_e^T (X_e A X_e^T + mu I)^-1 (X_e A X_z^T d_z - d_e) - A X_z^T d_z
//! ```
//!
//! This is the minimiser of `|d_z + X_z w|^2 / 2 + eps |w|^2 / 2 +
//! |d_e + X_e w|^2 / (2 mu)`, so `mu -> 0` enforces the constraint exactly.
//! Three algebraically equivalent routes are provided; [`batch_lcmv_solve`]
//! picks the one whose factorizations are smallest and best conditioned.

use nalgebra::{DMatrix, DVector};

use super::{Delta, HyperParams};
use crate::error::{AncError, Result};
use crate::filtering::ReferenceSnapshot;
use crate::linalg::spd_factor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchRoute {
    /// `L x L` Cholesky of `X_z^T X_z + eps I`.
    Direct,
    /// Woodbury identity on the `N_z x N_z` Gram `X_z X_z^T + eps I`; the
    /// `1/eps` factors of `A` cancel analytically.
    Woodbury,
    /// Second-order statistics only: `w = -(R_ee + mu (R_zz + eps I))^-1 (r_e + mu r_z)`.
    Statistics,
}

fn check_shapes(
    x_e: &DMatrix<f64>,
    x_z: &DMatrix<f64>,
    d_e: &DVector<f64>,
    d_z: &DVector<f64>,
) -> Result<()> {
    if x_e.ncols() != x_z.ncols() {
        return Err(AncError::shape("X_z columns", x_e.ncols(), x_z.ncols()));
    }
    if d_e.len() != x_e.nrows() {
        return Err(AncError::shape("d_e", x_e.nrows(), d_e.len()));
    }
    if d_z.len() != x_z.nrows() {
        return Err(AncError::shape("d_z", x_z.nrows(), d_z.len()));
    }
    Ok(())
}

fn check_params(params: &HyperParams) -> Result<()> {
    if !(params.epsilon.is_finite() && params.epsilon > 0.0) {
        return Err(AncError::Config(format!(
            "batch LCMV needs epsilon > 0, got {}",
            params.epsilon
        )));
    }
    if !(params.mu.is_finite() && params.mu >= 0.0) {
        return Err(AncError::Config(format!("mu must be >= 0, got {}", params.mu)));
    }
    Ok(())
}

/// Solve on stacked snapshot data, choosing the route automatically.
pub fn batch_lcmv_solve(
    x_e: &DMatrix<f64>,
    x_z: &DMatrix<f64>,
    d_e: &DVector<f64>,
    d_z: &DVector<f64>,
    params: &HyperParams,
) -> Result<DVector<f64>> {
    let l = x_e.ncols();
    let route = if x_e.nrows() > l {
        BatchRoute::Statistics
    } else if x_z.nrows() < l {
        BatchRoute::Woodbury
    } else {
        BatchRoute::Direct
    };
    batch_lcmv_solve_with(route, x_e, x_z, d_e, d_z, params)
}

pub fn batch_lcmv_solve_with(
    route: BatchRoute,
    x_e: &DMatrix<f64>,
    x_z: &DMatrix<f64>,
    d_e: &DVector<f64>,
    d_z: &DVector<f64>,
    params: &HyperParams,
) -> Result<DVector<f64>> {
    check_shapes(x_e, x_z, d_e, d_z)?;
    check_params(params)?;
    let (eps, mu) = (params.epsilon, params.mu);
    let l = x_e.ncols();
    match route {
        BatchRoute::Statistics => {
            let mut stats = LcmvStatistics::new(l);
            stats.add_block(x_e, x_z, d_e, d_z);
            stats.solve(params)
        }
        BatchRoute::Direct => {
            let mut gram = x_z.tr_mul(x_z);
            for i in 0..l {
                gram[(i, i)] += eps;
            }
            let a = spd_factor(gram, "X_z^T X_z + epsilon I")?;
            let b = a.solve(&x_z.tr_mul(d_z));
            if x_e.nrows() == 0 {
                return Ok(-b);
            }
            let a_xe_t = a.solve(&x_e.transpose());
            let mut s = x_e * &a_xe_t;
            for i in 0..s.nrows() {
                s[(i, i)] += mu;
            }
            let s = spd_factor(s, "constraint Gram X_e A X_e^T + mu I")?;
            let rhs = x_e * &b - d_e;
            Ok(a_xe_t * s.solve(&rhs) - b)
        }
        BatchRoute::Woodbury => {
            let mut k = x_z * x_z.transpose();
            for i in 0..k.nrows() {
                k[(i, i)] += eps;
            }
            // an empty X_z leaves A = I / eps
            let k = if k.nrows() > 0 {
                Some(spd_factor(k, "X_z X_z^T + epsilon I")?)
            } else {
                None
            };
            // B v = A X_z^T v = X_z^T K^-1 v
            let b = match &k {
                Some(k) => x_z.tr_mul(&k.solve(d_z)),
                None => DVector::zeros(l),
            };
            if x_e.nrows() == 0 {
                return Ok(-b);
            }
            // eps A X_e^T = X_e^T - X_z^T K^-1 X_z X_e^T
            let mut p = x_e.transpose();
            if let Some(k) = &k {
                p -= x_z.tr_mul(&k.solve(&(x_z * x_e.transpose())));
            }
            let mut s = x_e * &p;
            s = (&s + s.transpose()) * 0.5;
            for i in 0..s.nrows() {
                s[(i, i)] += eps * mu;
            }
            let s = spd_factor(s, "constraint Gram X_e A X_e^T + mu I")?;
            let rhs = x_e * &b - d_e;
            Ok(p * s.solve(&rhs) - b)
        }
    }
}

/// Accumulated second-order statistics of a run of snapshots, for solving
/// the batch problem over many samples at once.
#[derive(Debug, Clone)]
pub struct LcmvStatistics {
    pub r_ee: DMatrix<f64>,
    pub r_zz: DMatrix<f64>,
    pub r_e: DVector<f64>,
    pub r_z: DVector<f64>,
    pub d_e_energy: f64,
    pub d_z_energy: f64,
    pub n_samples: usize,
    pub n_primary: usize,
    pub n_secondary: usize,
}

impl LcmvStatistics {
    pub fn new(filter_len: usize) -> Self {
        LcmvStatistics {
            r_ee: DMatrix::zeros(filter_len, filter_len),
            r_zz: DMatrix::zeros(filter_len, filter_len),
            r_e: DVector::zeros(filter_len),
            r_z: DVector::zeros(filter_len),
            d_e_energy: 0.0,
            d_z_energy: 0.0,
            n_samples: 0,
            n_primary: 0,
            n_secondary: 0,
        }
    }

    fn add_block(
        &mut self,
        x_e: &DMatrix<f64>,
        x_z: &DMatrix<f64>,
        d_e: &DVector<f64>,
        d_z: &DVector<f64>,
    ) {
        self.r_ee.gemm_tr(1.0, x_e, x_e, 1.0);
        self.r_zz.gemm_tr(1.0, x_z, x_z, 1.0);
        self.r_e.gemv_tr(1.0, x_e, d_e, 1.0);
        self.r_z.gemv_tr(1.0, x_z, d_z, 1.0);
        self.d_e_energy += d_e.norm_squared();
        self.d_z_energy += d_z.norm_squared();
    }

    /// Add one sample's snapshot and noise-only mic signals.
    pub fn accumulate(&mut self, snap: &ReferenceSnapshot, d_e: &[f64], d_z: &[f64]) {
        self.add_block(
            &snap.x_e,
            &snap.x_z,
            &DVector::from_column_slice(d_e),
            &DVector::from_column_slice(d_z),
        );
        self.n_samples += 1;
        self.n_primary = d_e.len();
        self.n_secondary = d_z.len();
    }

    /// Batch LCMV weights for the accumulated data.
    pub fn solve(&self, params: &HyperParams) -> Result<DVector<f64>> {
        check_params(params)?;
        let (eps, mu) = (params.epsilon, params.mu);
        let mut m = &self.r_zz * mu + &self.r_ee;
        for i in 0..m.nrows() {
            m[(i, i)] += mu * eps;
        }
        let m = spd_factor(m, "R_ee + mu (R_zz + epsilon I)")?;
        Ok(-m.solve(&(&self.r_e + &self.r_z * mu)))
    }

    /// Mean of `z_k[t]^2` over mics and samples for fixed weights `w`.
    pub fn mean_square_z(&self, w: &DVector<f64>) -> f64 {
        let total = self.d_z_energy + 2.0 * self.r_z.dot(w) + w.dot(&(&self.r_zz * w));
        total / (self.n_samples.max(1) * self.n_secondary.max(1)) as f64
    }

    /// Constraint weight `mu` at which the batch problem matches the mean
    /// fixed point of the adaptive LCMV update run with `params`.
    ///
    /// With `delta > 0` the adaptive constraint is soft. Approximating the
    /// constraint Gram by its mean diagonal `g = s_e + delta` (with `s_e` the
    /// per-mic filtered-reference energy), the mean update is a gradient
    /// step on `1/2 |z|^2 + |e|^2 / (2 step g)`, i.e. `mu = step * g`.
    pub fn equivalent_mu(&self, params: &HyperParams) -> f64 {
        let n = self.n_samples.max(1) as f64;
        let s_e = self.r_ee.trace() / (n * self.n_primary.max(1) as f64);
        let delta = match params.delta {
            Delta::Absolute(d) => d,
            Delta::Relative(r) => r * s_e,
        };
        params.step(|| self.r_zz.trace() / n) * (s_e + delta)
    }

    /// Mean of `e_j[t]^2` over mics and samples for fixed weights `w`.
    pub fn mean_square_e(&self, w: &DVector<f64>) -> f64 {
        let total = self.d_e_energy + 2.0 * self.r_e.dot(w) + w.dot(&(&self.r_ee * w));
        total / (self.n_samples.max(1) * self.n_primary.max(1)) as f64
    }
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

    fn params(eps: f64, mu: f64) -> HyperParams {
        let mut p = HyperParams::exact(0.0);
        p.epsilon = eps;
        p.mu = mu;
        p
    }

    /// Penalty-form normal equations, solved independently of all routes:
    /// (X_z^T X_z + eps I + X_e^T X_e / mu) w = -(X_z^T d_z + X_e^T d_e / mu)
    fn penalty_minimiser(
        x_e: &DMatrix<f64>,
        x_z: &DMatrix<f64>,
        d_e: &DVector<f64>,
        d_z: &DVector<f64>,
        eps: f64,
        mu: f64,
    ) -> DVector<f64> {
        let l = x_e.ncols();
        let h = x_z.tr_mul(x_z) + DMatrix::identity(l, l) * eps + x_e.tr_mul(x_e) / mu;
        let g = x_z.tr_mul(d_z) + x_e.tr_mul(d_e) / mu;
        -h.lu().solve(&g).unwrap()
    }

    #[test]
    fn zero_targets_give_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x_e = random(&mut rng, 1, 6);
        let x_z = random(&mut rng, 3, 6);
        let w = batch_lcmv_solve(&x_e, &x_z, &DVector::zeros(1), &DVector::zeros(3), &params(1e-6, 1e-6))
            .unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn routes_agree_with_penalty_minimiser() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n_e, n_z, l) in [(1, 3, 6), (2, 8, 6), (3, 4, 10)] {
            let x_e = random(&mut rng, n_e, l);
            let x_z = random(&mut rng, n_z, l);
            let d_e = rvec(&mut rng, n_e);
            let d_z = rvec(&mut rng, n_z);
            let (eps, mu) = (0.05, 0.2);
            let oracle = penalty_minimiser(&x_e, &x_z, &d_e, &d_z, eps, mu);
            for route in [BatchRoute::Direct, BatchRoute::Woodbury, BatchRoute::Statistics] {
                let w = batch_lcmv_solve_with(route, &x_e, &x_z, &d_e, &d_z, &params(eps, mu)).unwrap();
                assert!(
                    (&w - &oracle).norm() < 1e-9 * oracle.norm(),
                    "{route:?} ({n_e},{n_z},{l})"
                );
            }
        }
    }

    #[test]
    fn vanishing_regularisation_meets_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x_e = random(&mut rng, 1, 6);
        let x_z = random(&mut rng, 3, 6);
        let d_e = rvec(&mut rng, 1);
        let d_z = rvec(&mut rng, 3);
        let w = batch_lcmv_solve(&x_e, &x_z, &d_e, &d_z, &params(1e-10, 1e-10)).unwrap();
        assert!((&d_e + &x_e * &w).norm() <= 1e-6);
    }

    #[test]
    fn requires_positive_epsilon() {
        let x = DMatrix::identity(1, 2);
        let d = DVector::zeros(1);
        assert!(matches!(
            batch_lcmv_solve(&x, &x, &d, &d, &params(0.0, 1e-3)),
            Err(AncError::Config(_))
        ));
    }

    #[test]
    fn singular_constraint_gram_at_zero_mu() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let row = random(&mut rng, 1, 5);
        let x_e = DMatrix::from_fn(2, 5, |_, j| row[(0, j)]);
        let x_z = random(&mut rng, 2, 5);
        let err = batch_lcmv_solve(&x_e, &x_z, &rvec(&mut rng, 2), &rvec(&mut rng, 2), &params(1e-3, 0.0))
            .unwrap_err();
        assert!(matches!(err, AncError::Singular { .. }), "{err}");
    }

    #[test]
    fn statistics_predict_mean_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = 4;
        let mut stats = LcmvStatistics::new(l);
        let w = rvec(&mut rng, l);
        let (mut se, mut sz) = (0.0, 0.0);
        for t in 0..30 {
            let snap = ReferenceSnapshot {
                x_e: random(&mut rng, 2, l),
                x_z: random(&mut rng, 3, l),
                t,
            };
            let d_e = rvec(&mut rng, 2);
            let d_z = rvec(&mut rng, 3);
            se += (&d_e + &snap.x_e * &w).norm_squared();
            sz += (&d_z + &snap.x_z * &w).norm_squared();
            stats.accumulate(&snap, d_e.as_slice(), d_z.as_slice());
        }
        assert!((stats.mean_square_e(&w) - se / 60.0).abs() < 1e-12);
        assert!((stats.mean_square_z(&w) - sz / 90.0).abs() < 1e-12);
    }
}
