//! Multichannel active noise control simulation.
//!
//! The crate simulates a room with a noise source, control loudspeakers and
//! two classes of microphones: *primary* control microphones, where the
//! residual is constrained to zero, and *secondary* control microphones,
//! whose residual power is minimised. Four controllers are provided:
//!
//! * two-point FxLMS (minimise the primary residual only),
//! * multi-point FxLMS (minimise primary and secondary residuals jointly),
//! * adaptive LCMV control in Frost generalized-sidelobe-canceller form,
//!   which takes a projected gradient step on the secondary power and a
//!   minimum-norm correction that drives the primary residual to zero,
//! * the batch LCMV closed form, with an independent KKT oracle.
//!
//! ```text
//!  d ──► h_ref ──► x_r ──► W ──► y_s ──► g_{e,s} ──►(+)──► e
//!  │                                                  ▲
//!  └────────────────────────► p_e ────────────────────┘
//! ```
//!
//! Modules:
//!
//! * [`scene`]: scene configuration, synthetic impulse responses, IR
//!   manifests, noise generation.
//! * [`filtering`]: delay lines, the control-filter layout and the
//!   filtered-reference snapshots `X_e[t]`, `X_z[t]`.
//! * [`algorithms`]: controller updates, batch solver, oracle and the
//!   per-sample simulation loop.
//! * [`metrics`]: noise reduction, convergence curves, Welch PSD, heatmap
//!   tables.
//! * [`harness`]: JSON experiment configs, multi-run comparisons, exports
//!   and the command line front end.

pub mod algorithms;
pub mod error;
pub mod filtering;
pub mod harness;
pub(crate) mod linalg;
pub mod metrics;
pub mod scene;

pub use error::{AncError, Result};
