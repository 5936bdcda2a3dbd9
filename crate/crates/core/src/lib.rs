//! Numerical laboratory for the Kobayashi–Royden pseudometric of Riemannian
//! manifolds, computed through discretised conformal harmonic discs.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] — charted metrics, curvature, geodesics, pullback and
//!   rescaled metrics, model manifolds;
//! * [`disc`] — the disc grid, Dirichlet energy, tension field, harmonic
//!   relaxation and discs with a prescribed 1-jet;
//! * [`kobayashi`] — Poincaré quantities, upper/lower estimates of the
//!   pseudometric, chain and integrated pseudodistances;
//! * [`pinched`] — quasi-bounded geometry, the scale `t0`, claim discs and
//!   bi-Lipschitz certificates under pinched negative curvature;
//! * [`renormalize`] — MPSH tests, the capped family `Psi_q`, Sibony's
//!   Schwarz lemma, Zalcman rescaling and Brody limits.

pub mod disc;
pub mod expr;
pub mod geometry;
pub mod kobayashi;
pub mod linalg;
pub mod pinched;
pub mod renormalize;
pub mod tolerances;

/// Version string embedded in every emitted document.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
