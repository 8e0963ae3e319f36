//! Controllers and their shared linear algebra.
//!
//! All updates act on the stacked weight vector `w` and a frozen
//! [`ReferenceSnapshot`]:
//!
//! * two-point FxLMS: `w -= a X_e^T e`
//! * multi-point FxLMS: `w -= a (X_e^T e + X_z^T z)`
//! * adaptive LCMV: `w -= a P_c X_z^T z + P_mn e`, with
//!   `P_c = I - X_e^T (X_e X_e^T + dI)^-1 X_e` and
//!   `P_mn = X_e^T (X_e X_e^T + dI)^-1`, evaluated through the Lagrange
//!   multiplier form so no `L x L` matrix is formed.

mod batch;
mod fxlms;
mod lcmv;
mod oracle;
mod simulate;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::filtering::{FilterLayout, FilterWeights, ReferenceSnapshot};

pub use batch::{batch_lcmv_solve, batch_lcmv_solve_with, BatchRoute, LcmvStatistics};
pub use fxlms::{multi_point_fxlms_update, two_point_fxlms_update};
pub use lcmv::{
    compute_lambda, effective_delta, lcmv_adaptive_update, lcmv_projector_step, projector_kernel,
    projector_min_norm,
};
pub use oracle::{kkt_residual, oracle_constrained_ls};
pub use simulate::{
    perturb_secondary_paths, run_controller, run_controller_observed, warmup_len, ControllerSetup,
    ErrorSignal, StepRecord,
};

/// Growth factor of `|w|` over its first nonzero value that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    TwoPointFxlms,
    MultiPointFxlms,
    LcmvAdaptive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::TwoPointFxlms,
        Algorithm::MultiPointFxlms,
        Algorithm::LcmvAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::TwoPointFxlms => "two_point_fxlms",
            Algorithm::MultiPointFxlms => "multi_point_fxlms",
            Algorithm::LcmvAdaptive => "lcmv_adaptive",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| {
                AncError::Config(format!(
                    "unknown algorithm {name:?} (expected one of two_point_fxlms, multi_point_fxlms, lcmv_adaptive)"
                ))
            })
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Regularizer added to `X_e X_e^T` in the adaptive LCMV update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta {
    Absolute(f64),
    /// Scaled by `trace(X_e X_e^T) / N_e` at every step.
    Relative(f64),
}

impl Default for Delta {
    fn default() -> Self {
        Delta::Relative(1e-8)
    }
}

fn default_alpha() -> f64 {
    0.01
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_mu() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}
fn default_norm_floor() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    /// Learning rate. With `normalized`, divided by the filtered-reference
    /// energy of the terms it scales.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Ridge on `X_z^T X_z` in the batch solver.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Regularizer on the batch constraint Gram; equivalent to a quadratic
    /// penalty of weight `1/mu` on the constraint residual.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub delta: Delta,
    #[serde(default = "default_true")]
    pub normalized: bool,
    #[serde(default = "default_norm_floor")]
    pub norm_floor: f64,
    /// Per-mic error weights for multi-point FxLMS, primary mics first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mic_weights: Option<Vec<f64>>,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: default_alpha(),
            epsilon: default_epsilon(),
            mu: default_mu(),
            delta: Delta::default(),
            normalized: true,
            norm_floor: default_norm_floor(),
            mic_weights: None,
        }
    }
}

impl HyperParams {
    /// Unnormalized parameters with no regularization, for exact algebra.
    pub fn exact(alpha: f64) -> Self {
        HyperParams {
            alpha,
            epsilon: 0.0,
            mu: 0.0,
            delta: Delta::Absolute(0.0),
            normalized: false,
            norm_floor: default_norm_floor(),
            mic_weights: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AncError::Config(msg));
        // alpha = 0 is accepted and freezes the FxLMS weights
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        for (name, v) in [("epsilon", self.epsilon), ("mu", self.mu)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        let (Delta::Absolute(d) | Delta::Relative(d)) = self.delta;
        if !(d.is_finite() && d >= 0.0) {
            return bad(format!("delta must be finite and >= 0, got {d}"));
        }
        if !(self.norm_floor.is_finite() && self.norm_floor > 0.0) {
            return bad(format!("norm_floor must be positive, got {}", self.norm_floor));
        }
        if let Some(w) = &self.mic_weights {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad("mic_weights must be finite and >= 0".into());
            }
        }
        Ok(())
    }

    /// Step size after optional normalization by `energy`.
    pub(crate) fn step(&self, energy: impl FnOnce() -> f64) -> f64 {
        if self.normalized {
            self.alpha / (energy() + self.norm_floor)
        } else {
            self.alpha
        }
    }
}

/// Lagrange multipliers of the primary-mic constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeMultipliers {
    pub lambda: DVector<f64>,
}

/// One adaptive controller: algorithm, hyperparameters and weights.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub algorithm: Algorithm,
    pub weights: FilterWeights,
    pub params: HyperParams,
    pub steps: usize,
    first_norm: Option<f64>,
}

impl ControllerState {
    /// Zero-initialised weights.
    pub fn new(algorithm: Algorithm, layout: FilterLayout, params: HyperParams) -> Result<Self> {
        params.validate()?;
        Ok(ControllerState {
            algorithm,
            weights: FilterWeights::zeros(layout),
            params,
            steps: 0,
            first_norm: None,
        })
    }

    /// Run the configured algorithm's update.
    pub fn update(&mut self, snap: &ReferenceSnapshot, e: &[f64], z: &[f64]) -> Result<()> {
        match self.algorithm {
            Algorithm::TwoPointFxlms => two_point_fxlms_update(self, snap, e),
            Algorithm::MultiPointFxlms => multi_point_fxlms_update(self, snap, e, z),
            Algorithm::LcmvAdaptive => lcmv_adaptive_update(self, snap, e, z),
        }
    }

    /// `w <- w - step`, rejecting non-finite or runaway weights. On error the
    /// previous weights are kept.
    pub(crate) fn apply_step(&mut self, step: &DVector<f64>) -> Result<()> {
        let last_norm = self.weights.norm();
        let next = &self.weights.w - step;
        let diverged = |reason: String| AncError::Divergence {
            step: self.steps,
            reason,
            last_norm,
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(diverged("non-finite weights".into()));
        }
        let norm = next.norm();
        match self.first_norm {
            Some(first) if norm > DIVERGENCE_FACTOR * first => {
                return Err(diverged(format!(
                    "|w| = {norm:.3e} exceeds {DIVERGENCE_FACTOR:e} x its first nonzero value {first:.3e}"
                )));
            }
            None if norm > 0.0 => self.first_norm = Some(norm),
            _ => {}
        }
        self.weights.w = next;
        self.steps += 1;
        Ok(())
    }
}

pub(crate) fn check_snapshot(snap: &ReferenceSnapshot, e: &[f64], z: Option<&[f64]>) -> Result<()> {
    if snap.x_e.nrows() != e.len() {
        return Err(AncError::shape("primary error vector", snap.x_e.nrows(), e.len()));
    }
    if let Some(z) = z {
        if snap.x_z.nrows() != z.len() {
            return Err(AncError::shape("secondary error vector", snap.x_z.nrows(), z.len()));
        }
    }
    if snap.x_e.ncols() != snap.x_z.ncols() {
        return Err(AncError::shape("X_z columns", snap.x_e.ncols(), snap.x_z.ncols()));
    }
    Ok(())
}
