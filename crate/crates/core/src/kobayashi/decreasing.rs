use serde::{Deserialize, Serialize};

use super::{kobayashi_royden_upper, KobayashiError, UpperBudget};
use crate::geometry::ChartedMetric;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecreasingRow {
    pub p: Vec<f64>,
    pub xi: Vec<f64>,
    /// Estimate on the sub-domain.
    pub sub_upper: f64,
    /// Estimate from an independent search in the ambient chart.
    pub ambient_search: f64,
    /// Ambient estimate with the sub-domain certificate disc admitted as a
    /// candidate (it is also a holomorphic disc of the ambient manifold).
    pub ambient_upper: f64,
    /// Whether the sub-domain disc stayed inside the ambient margin.
    pub nested_disc_admitted: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecreasingReport {
    pub rows: Vec<DecreasingRow>,
    pub passes: bool,
    /// Largest `ambient_upper - sub_upper` over the rows.
    pub worst_excess: f64,
}

/// Checks `F_ambient(p, xi) <= F_sub(p, xi) + tol` at each sample, where
/// `m_sub` carries the same tensor as `m_amb` on a smaller coordinate
/// region. Any disc admissible in the sub-domain is a disc in the ambient
/// manifold too; it is re-validated against the ambient chart margin and
/// competes with the ambient search.
pub fn decreasing_property_check(
    m_sub: &ChartedMetric,
    m_amb: &ChartedMetric,
    samples: &[(Vec<f64>, Vec<f64>)],
    budget: &UpperBudget,
    tol: f64,
) -> Result<DecreasingReport, KobayashiError> {
    if m_sub.dim() != m_amb.dim() {
        return Err(KobayashiError::InvalidConfig(format!(
            "sub-domain dimension {} differs from ambient dimension {}",
            m_sub.dim(),
            m_amb.dim()
        )));
    }
    let n = m_sub.dim();
    let mut rows = Vec::with_capacity(samples.len());
    let mut worst_excess = f64::NEG_INFINITY;
    for (p, xi) in samples {
        m_amb.check_point(p)?;
        let (mut gs, mut ga) = (vec![0.0; n * n], vec![0.0; n * n]);
        m_sub.metric(p)?;
        m_sub.metric_raw(p, &mut gs);
        m_amb.metric_raw(p, &mut ga);
        let scale = ga.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        if gs.iter().zip(&ga).any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
            return Err(KobayashiError::InvalidConfig(format!(
                "metrics differ at {p:?}: not a sub-domain restriction"
            )));
        }
        let sub = kobayashi_royden_upper(m_sub, p, xi, budget)?;
        let amb = kobayashi_royden_upper(m_amb, p, xi, budget)?;
        let nested = sub.disc.as_ref().is_some_and(|d| {
            (0..d.grid().n_nodes()).all(|i| m_amb.contains_with_margin(d.value(i), budget.margin))
        });
        let ambient_upper = if nested { amb.upper.min(sub.upper) } else { amb.upper };
        let excess = ambient_upper - sub.upper;
        worst_excess = worst_excess.max(excess);
        rows.push(DecreasingRow {
            p: p.clone(),
            xi: xi.clone(),
            sub_upper: sub.upper,
            ambient_search: amb.upper,
            ambient_upper,
            nested_disc_admitted: nested,
            holds: excess <= tol,
        });
    }
    let passes = rows.iter().all(|r| r.holds);
    Ok(DecreasingReport {
        rows,
        passes,
        worst_excess,
    })
}
