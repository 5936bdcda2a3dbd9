//! Discretised maps from the unit disc: energy, tension, relaxation,
//! conformality and discs with a prescribed 1-jet.

mod conformal;
mod energy;
mod grid;
pub mod io;
mod jet;
mod map;
mod relax;
mod tension;

pub use conformal::{conformality_defect, node_defect, weakly_conformal_check, WeakConformality};
pub use energy::energy;
pub use grid::{DiscGrid, DIRECTIONS};
pub use jet::{jet_disc, jet_disc_unchecked, normal_disc, orthonormalize_plane, relax_centered, JetDisc, JetOptions};
pub use map::DiscMap;
pub use relax::{harmonic_relax, relax_with, RelaxOptions, SolveReport};
pub use tension::{tension_field, tension_residual};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum DiscError {
    #[error("disc resolution must be odd and at least 5, got {0}")]
    InvalidResolution(usize),
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("node {node} maps outside the target chart ({point:?})")]
    OutOfChart { node: usize, point: Vec<f64> },
    #[error("target metric is singular at node {node}")]
    SingularMetric { node: usize },
    #[error("relaxation left the chart after {halvings} step halvings")]
    LeftChart { halvings: usize },
    #[error("relaxation did not converge: tension {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("jet drift {drift:.3e} exceeds tolerance {tau_jet:.3e}")]
    JetDrift { drift: f64, tau_jet: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
