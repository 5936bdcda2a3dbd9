//! Pinched negative curvature: the scale `t0`, claim discs in rescaled
//! normal coordinates, and two-sided (bi-Lipschitz) certificates for the
//! Kobayashi–Royden pseudometric.
//!
//! Everything is written in a `g(p)`-orthonormal frame of `T_pM`, so
//! `h_p(0) = I` and the balls `B_{h(p)}(0, r)` are Euclidean balls.

mod certificate;
mod claim;
mod scale;

pub use certificate::{
    bilipschitz_verify, upper_bound_certificate, BiLipschitzCertificate, BiLipschitzConfig, BiLipschitzRow,
    UpperBoundCertificate,
};
pub use claim::{claim_disc, rescaled_normal_metric, ClaimDisc, ClaimOptions};
pub use scale::{find_t0, T0Config, T0Search};

use thiserror::Error;

use crate::disc::DiscError;
use crate::geometry::GeometryError;
use crate::kobayashi::KobayashiError;

#[derive(Debug, Error)]
pub enum PinchedError {
    #[error("no scale t in [{t_min:.3e}, r0/2) has C^k0 deviation below eps0 = {eps0} (deviation {deviation:.3e} at t_min)")]
    NoScaleFound { t_min: f64, deviation: f64, eps0: f64 },
    #[error("claim disc has alpha = {alpha:.4} < {threshold:.4}; shrink eps0")]
    ClaimFailure { alpha: f64, threshold: f64 },
    #[error("v and w are not h(p)-orthogonal (h(p)(v, w) = {inner:.3e})")]
    NotOrthogonal { inner: f64 },
    #[error("certificate failed at rows {rows:?}")]
    CertificateFailure { rows: Vec<usize> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Kobayashi(#[from] KobayashiError),
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
