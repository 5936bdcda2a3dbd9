use serde::{Deserialize, Serialize};

use super::KobayashiError;
use crate::geometry::{curvature_bounds_scan, ChartedMetric};

/// Relative slack on `K_max <= -c` absorbing the finite-difference error of
/// the curvature scan.
pub const PINCH_SLACK: f64 = 1e-4;

/// Sampled evidence that the sectional curvature is at most `-c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PinchCertificate {
    pub model: String,
    pub c: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Scans sectional curvatures and certifies `K <= -c` when
/// `K_max <= -c (1 - PINCH_SLACK)`.
pub fn certify_pinch(m: &ChartedMetric, c: f64, samples: usize, seed: u64) -> Result<PinchCertificate, KobayashiError> {
    if !(c > 0.0) {
        return Err(KobayashiError::InvalidConfig(format!("pinch constant must be positive, got {c}")));
    }
    let b = curvature_bounds_scan(m, samples, seed)?;
    if b.k_max > -c * (1.0 - PINCH_SLACK) {
        return Err(KobayashiError::PinchNotCertified { k_max: b.k_max, c });
    }
    Ok(PinchCertificate {
        model: m.name().to_string(),
        c,
        k_min: b.k_min,
        k_max: b.k_max,
        samples,
        seed,
    })
}

/// Curvature lower bound `F(p, xi) >= sqrt(c / 8) |xi|_g`, valid under a
/// certified bound `K <= -c`.
pub fn kobayashi_royden_lower(
    m: &ChartedMetric,
    p: &[f64],
    xi: &[f64],
    cert: &PinchCertificate,
) -> Result<f64, KobayashiError> {
    m.check_point(p)?;
    if cert.k_max > -cert.c * (1.0 - PINCH_SLACK) {
        return Err(KobayashiError::PinchNotCertified {
            k_max: cert.k_max,
            c: cert.c,
        });
    }
    Ok((cert.c / 8.0).sqrt() * m.norm(p, xi))
}

/// Outcome of [`hyperbolic_at_point`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyperbolicity {
    /// `F(y, xi) >= constant |xi|_g` on the chart around the point.
    Hyperbolic { constant: f64, c: f64 },
    /// No lower-bound mechanism applies.
    Unknown { k_max: f64 },
}

/// Pointwise hyperbolicity from a curvature certificate.
///
/// With `c_pinch = Some(c)` the bound `K <= -c` is checked; with `None` the
/// best constant `c = -K_max` is read off the scan when `K_max < 0`.
pub fn hyperbolic_at_point(
    m: &ChartedMetric,
    p: &[f64],
    c_pinch: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<Hyperbolicity, KobayashiError> {
    m.check_point(p)?;
    let b = curvature_bounds_scan(m, samples, seed)?;
    let c = match c_pinch {
        Some(c) if b.k_max <= -c * (1.0 - PINCH_SLACK) => c,
        Some(_) => return Ok(Hyperbolicity::Unknown { k_max: b.k_max }),
        None if b.k_max < -PINCH_SLACK => -b.k_max,
        None => return Ok(Hyperbolicity::Unknown { k_max: b.k_max }),
    };
    Ok(Hyperbolicity::Hyperbolic {
        constant: (c / 8.0).sqrt(),
        c,
    })
}
