//! JSON manifold specifications.
//!
//! ```json
//! {"name": "H2", "dim": 2, "kind": "builtin",
//!  "params": {"model": "hyperbolic_ball"}}
//! ```
//!
//! Unknown fields are rejected at every level.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::models;
use super::{ChartDomain, ChartedMetric, GeometryError};
use crate::expr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Builtin,
    Expression,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecParams {
    /// Builtin model: euclidean, poincare_disc, hyperbolic_ball, flat_torus,
    /// warped_product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    /// Warping function `f(r)` of a warped product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Row-major metric components (upper triangle is read).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<String>>>,
    /// Conformal factor `lambda` for `g = lambda * delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_factor: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub name: String,
    pub dim: usize,
    pub kind: SpecKind,
    #[serde(default)]
    pub params: SpecParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<ChartDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodicity: Option<Vec<Option<f64>>>,
}

fn spec_err(msg: impl Into<String>) -> GeometryError {
    GeometryError::Spec(msg.into())
}

impl ManifoldSpec {
    pub fn from_json_str(s: &str) -> Result<Self, GeometryError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// A builtin spec with default parameters.
    pub fn builtin(model: &str, dim: usize) -> Self {
        Self {
            name: model.to_string(),
            dim,
            kind: SpecKind::Builtin,
            params: SpecParams {
                model: Some(model.to_string()),
                ..SpecParams::default()
            },
            domain: None,
            periodicity: None,
        }
    }

    pub fn build(&self) -> Result<ChartedMetric, GeometryError> {
        let n = self.dim;
        if n < 2 {
            return Err(spec_err(format!("dimension must be at least 2, got {n}")));
        }
        let p = &self.params;
        let base = match self.kind {
            SpecKind::Builtin => {
                let model = p
                    .model
                    .as_deref()
                    .ok_or_else(|| spec_err("builtin specs need params.model"))?;
                match model {
                    "euclidean" => {
                        models::euclidean(n, p.half_width.unwrap_or(models::EUCLIDEAN_HALF_WIDTH))
                    }
                    "poincare_disc" => {
                        if n != 2 {
                            return Err(spec_err("poincare_disc is two-dimensional"));
                        }
                        models::poincare_disc()
                    }
                    "hyperbolic_ball" => models::hyperbolic_ball(n),
                    "flat_torus" => {
                        let periods = p
                            .periods
                            .clone()
                            .unwrap_or_else(|| vec![std::f64::consts::TAU; n]);
                        if periods.len() != n || periods.iter().any(|l| !(*l > 0.0)) {
                            return Err(spec_err("flat_torus needs dim positive periods"));
                        }
                        models::flat_torus(periods)
                    }
                    "warped_product" => {
                        if n != 2 {
                            return Err(spec_err("warped_product is two-dimensional"));
                        }
                        let f = p
                            .f
                            .as_deref()
                            .ok_or_else(|| spec_err("warped_product needs params.f"))?;
                        models::warped_product(f, p.r_min.unwrap_or(0.1), p.r_max.unwrap_or(3.0))?
                    }
                    other => return Err(spec_err(format!("unknown builtin model {other:?}"))),
                }
            }
            SpecKind::Expression => {
                let domain = self
                    .domain
                    .clone()
                    .ok_or_else(|| spec_err("expression specs need a domain"))?;
                let field: Arc<dyn super::MetricField> =
                    match (&p.components, &p.conformal_factor) {
                        (Some(rows), None) => {
                            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                                return Err(spec_err("components must be a dim x dim array"));
                            }
                            let comps = rows
                                .iter()
                                .flatten()
                                .map(|s| Expr::parse(s, n))
                                .collect::<Result<Vec<_>, _>>()?;
                            Arc::new(models::ExpressionField::new(n, comps))
                        }
                        (None, Some(f)) => {
                            Arc::new(models::ConformalExprField::new(n, Expr::parse(f, n)?))
                        }
                        _ => {
                            return Err(spec_err(
                                "expression specs need exactly one of components, conformal_factor",
                            ))
                        }
                    };
                ChartedMetric::new(self.name.clone(), domain, field)
            }
        };
        if let Some(d) = &self.domain {
            if d.dim() != n {
                return Err(spec_err("domain dimension differs from dim"));
            }
        }
        let mut m = match (&self.domain, self.kind) {
            (Some(d), SpecKind::Builtin) => base.restricted(d.clone(), self.name.clone()),
            _ => base.restricted(base.domain().clone(), self.name.clone()),
        };
        if let Some(per) = &self.periodicity {
            if per.len() != n {
                return Err(spec_err("periodicity length differs from dim"));
            }
            m = m.with_periodicity(per.clone());
        }
        Ok(m)
    }
}
