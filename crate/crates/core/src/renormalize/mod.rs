//! Renormalisation: MPSH test functions, the capped family `Psi_q`,
//! Sibony's Schwarz lemma, Zalcman rescaling and Brody limits.

mod brody;
mod family;
mod mpsh;
mod psi;
mod sibony;
mod zalcman;

pub use brody::{brody_extract, BrodyConfig, BrodyReport, BrodyVerdict, RadiusCheck};
pub use family::{
    ConstantFamily, DiscFamily, LinearFamily, MapFamily, MobiusFamily, SchwarzAxioms, SchwarzFamily,
};
pub use mpsh::{find_log_a, mpsh_test, normal_coordinates, stress_family, LogABudget, LogAResult, MpshReport};
pub use psi::{psi, psi_cap, PsiCap};
pub use sibony::{sibony_verify, SibonyReport, SIBONY_LOG_REL};
pub use zalcman::{zalcman_rescale, RescalingSequence, RescalingStep, Witness, ZalcmanConfig};

use thiserror::Error;

use crate::disc::DiscError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum RenormError {
    #[error("no A <= {a_max} makes the test function MPSH on the stress family (worst Laplacian {worst:.3e})")]
    ABudgetExceeded { a_max: f64, worst: f64 },
    #[error("chart does not contain the closed ball of radius {radius} about {center:?}")]
    ChartTooSmall { center: Vec<f64>, radius: f64 },
    #[error("precondition failed at node {node}: {reason}")]
    PreconditionFailed { node: usize, reason: String },
    #[error("witness for hypothesis (iv) invalid at n = {n}: {detail}")]
    WitnessInvalid { n: usize, detail: String },
    #[error("extraction failed at n = {n}: {detail}")]
    ExtractionFailed { n: usize, detail: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
