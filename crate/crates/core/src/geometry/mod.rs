//! Charted Riemannian geometry: metrics, curvature, geodesics, pullbacks.

mod curvature;
mod domain;
mod geodesic;
mod metric;
pub mod models;
mod pullback;
mod quasi_bounded;
mod rescale;
pub mod spec_file;
mod tabulated;

pub use curvature::{
    christoffel, curvature_bounds_scan, curvature_report, riemann, sectional_curvature,
    CurvatureBounds, CurvatureReport, CurvatureSample, CurvatureWorkspace,
};
pub use domain::{gaussian, unit_ball_sample, unit_sphere_sample, ChartDomain};
pub use geodesic::{
    exp_jacobian, geodesic_exp, geodesic_exp_lifted, geodesic_log, geodesic_trajectory, Trajectory,
    DEFAULT_STEPS,
};
pub use metric::{ChartedMetric, MetricField, FD_STEP};
pub use pullback::{pullback_exp_metric, pullback_with, Frame, PullbackField, PullbackOptions};
pub use quasi_bounded::{deviation_profile, quasi_bounded_check, DeviationProfile, QuasiBoundedReport};
pub(crate) use quasi_bounded::orthonormal_profile;
pub use rescale::{rescaled_metric, RescaledField};
pub use spec_file::ManifoldSpec;
pub use tabulated::TabulatedMetric;

use thiserror::Error;

use crate::expr::ExprError;

/// A tangent vector with its base point.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub comp: Vec<f64>,
}

impl TangentVector {
    pub fn new(m: &ChartedMetric, base: Vec<f64>, comp: Vec<f64>) -> Result<Self, GeometryError> {
        m.check_point(&base)?;
        if comp.len() != m.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: m.dim(),
                got: comp.len(),
            });
        }
        Ok(Self { base, comp })
    }

    /// `|xi|_g` at the base point.
    pub fn norm(&self, m: &ChartedMetric) -> f64 {
        m.norm(&self.base, &self.comp)
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point {0:?} lies outside the chart domain")]
    OutOfChart(Vec<f64>),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric is singular or not positive definite at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("metric is not exactly symmetric at {0:?}")]
    NotSymmetric(Vec<f64>),
    #[error("degenerate 2-plane (Gram determinant {gram:.3e})")]
    DegeneratePlane { gram: f64 },
    #[error("curvature scan failed: {0}")]
    ScanFailed(String),
    #[error("geodesic left the chart at parameter t = {t:.6}")]
    LeftChart { t: f64 },
    #[error("geodesic step control failed after {substeps} substeps")]
    ReducedStepExhausted { substeps: usize },
    #[error("shooting for the inverse exponential map did not converge (residual {residual:.3e})")]
    ShootingFailed { residual: f64 },
    #[error("exponential map is not an immersion near {point:?} (smallest singular value {sigma:.3e})")]
    NotImmersion { point: Vec<f64>, sigma: f64 },
    #[error("scale factor must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("q_max = {0} exceeds the finite-difference limit of 3")]
    DerivativeOrderTooHigh(usize),
    #[error("manifold spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
