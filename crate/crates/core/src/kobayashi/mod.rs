//! Kobayashi–Royden pseudometric estimates and the two pseudodistances.
//!
//! Upper estimates come from explicitly constructed conformal harmonic
//! discs; lower estimates only from a certified negative curvature bound.
//! Every statement here is therefore a bracket.

mod chain;
mod decreasing;
mod integrated;
mod lower;
mod poincare;
mod schwarz;
mod upper;

pub use chain::{chain_distance, locate_in_disc, ChainConfig, ChainDistanceResult, ChainLink};
pub use decreasing::{decreasing_property_check, DecreasingReport, DecreasingRow};
pub use integrated::{integrated_distance, IntegratedDistanceResult, PathConfig};
pub use lower::{
    certify_pinch, hyperbolic_at_point, kobayashi_royden_lower, Hyperbolicity, PinchCertificate, PINCH_SLACK,
};
pub use poincare::{disc_distance_2d, poincare_distance, poincare_metric};
pub use schwarz::{schwarz_check, SchwarzReport, TAU_SCHWARZ};
pub use upper::{
    admissible_disc, kobayashi_royden_upper, AdmissibleDisc, DiscCertificate, KobayashiEstimate, Tolerances,
    UpperBudget,
};

use thiserror::Error;

use crate::disc::DiscError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum KobayashiError {
    #[error("point {0} lies outside the unit disc")]
    OutsideDisc(String),
    #[error("tangent vector must be nonzero")]
    ZeroVector,
    #[error("no admissible disc: {0}")]
    NoAdmissibleDisc(String),
    #[error("curvature bound not certified: K_max = {k_max:.6} > -{c}")]
    PinchNotCertified { k_max: f64, c: f64 },
    #[error("no Kobayashi chain links the endpoints ({cloud} cloud points, {discs} discs)")]
    Disconnected { cloud: usize, discs: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
