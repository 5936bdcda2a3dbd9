use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ChartDomain, GeometryError};
use crate::linalg;

/// Relative finite-difference step for first derivatives of the metric.
pub const FD_STEP: f64 = 1e-4;

/// A metric tensor field on a coordinate chart.
///
/// Implementations write row-major `n x n` blocks and must be callable from
/// many threads at once.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `g_ij(x)` into `out[i * n + j]`.
    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Writes `d_k g_ij(x)` into `out[k * n * n + i * n + j]` and returns
    /// `true`, or returns `false` when no closed form is available.
    fn eval_deriv(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// A Riemannian manifold presented in a single coordinate chart.
#[derive(Clone)]
pub struct ChartedMetric {
    name: String,
    domain: ChartDomain,
    periodicity: Vec<Option<f64>>,
    periodic: bool,
    field: Arc<dyn MetricField>,
}

impl fmt::Debug for ChartedMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedMetric")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .field("periodicity", &self.periodicity)
            .finish()
    }
}

impl ChartedMetric {
    pub fn new(name: impl Into<String>, domain: ChartDomain, field: Arc<dyn MetricField>) -> Self {
        let n = field.dim();
        assert_eq!(domain.dim(), n, "domain and metric dimensions differ");
        assert!(n >= 2, "charts must have dimension at least 2");
        Self {
            name: name.into(),
            domain,
            periodicity: vec![None; n],
            periodic: false,
            field,
        }
    }

    /// Declares per-axis periods. Coordinates along periodic axes are
    /// wrapped into `[lo, lo + period)` before the field is evaluated.
    pub fn with_periodicity(mut self, periods: Vec<Option<f64>>) -> Self {
        assert_eq!(periods.len(), self.dim());
        self.periodic = periods.iter().any(Option::is_some);
        self.periodicity = periods;
        self
    }

    /// Same tensor on a different coordinate region.
    pub fn restricted(&self, domain: ChartDomain, name: impl Into<String>) -> Self {
        assert_eq!(domain.dim(), self.dim());
        Self {
            name: name.into(),
            domain,
            periodicity: self.periodicity.clone(),
            periodic: self.periodic,
            field: Arc::clone(&self.field),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn periodicity(&self) -> &[Option<f64>] {
        &self.periodicity
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn field(&self) -> &Arc<dyn MetricField> {
        &self.field
    }

    /// Finite-difference step scaled to the chart (capped at [`FD_STEP`]).
    pub fn fd_step(&self) -> f64 {
        FD_STEP * self.domain.scale(&self.periodicity).min(1.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.domain.contains(x, &self.periodicity)
    }

    pub fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        self.domain.contains_with_margin(x, &self.periodicity, margin)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.contains(x) {
            Ok(())
        } else {
            Err(GeometryError::OutOfChart(x.to_vec()))
        }
    }

    /// Coordinates with periodic axes wrapped into their fundamental box.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.wrap_in_place(&mut y);
        y
    }

    pub fn wrap_in_place(&self, x: &mut [f64]) {
        let lo = match &self.domain {
            ChartDomain::Box { lo, .. } => Some(lo),
            _ => None,
        };
        for (i, p) in self.periodicity.iter().enumerate() {
            if let Some(p) = p {
                let base = lo.map_or(0.0, |l| l[i]);
                x[i] = base + (x[i] - base).rem_euclid(*p);
            }
        }
    }

    /// Minimal-image displacement `b - a` (plain difference on
    /// non-periodic axes).
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.periodicity)
            .map(|((x, y), p)| {
                let d = y - x;
                match p {
                    Some(p) => d - p * (d / p).round(),
                    None => d,
                }
            })
            .collect()
    }

    /// Evaluates `g(x)` into `out` without a domain check.
    pub fn metric_raw(&self, x: &[f64], out: &mut [f64]) {
        if self.is_periodic() {
            let y = self.wrap(x);
            self.field.eval(&y, out);
        } else {
            self.field.eval(x, out);
        }
    }

    /// First partial derivatives `d_k g_ij` into `out[k*n*n + i*n + j]`,
    /// from the closed form when available, else central differences.
    pub fn metric_deriv_raw(&self, x: &[f64], out: &mut [f64]) {
        let y;
        let x = if self.is_periodic() {
            y = self.wrap(x);
            &y[..]
        } else {
            x
        };
        if self.field.eval_deriv(x, out) {
            return;
        }
        self.metric_deriv_fd(x, out);
    }

    /// Central-difference derivatives regardless of any closed form.
    pub fn metric_deriv_fd(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let h = self.fd_step();
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; n * n];
        let mut gm = vec![0.0; n * n];
        for k in 0..n {
            xp[k] = x[k] + h;
            self.metric_raw(&xp, &mut gp);
            xp[k] = x[k] - h;
            self.metric_raw(&xp, &mut gm);
            xp[k] = x[k];
            for idx in 0..n * n {
                out[k * n * n + idx] = (gp[idx] - gm[idx]) / (2.0 * h);
            }
        }
    }

    pub fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(x)?;
        let n = self.dim();
        let mut g = vec![0.0; n * n];
        self.metric_raw(x, &mut g);
        Ok(DMatrix::from_row_slice(n, n, &g))
    }

    pub fn inner(&self, x: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut g = vec![0.0; n * n];
        self.metric_raw(x, &mut g);
        linalg::bilinear(n, &g, v, w)
    }

    /// `|v|_g = sqrt(g(x)(v, v))`.
    pub fn norm(&self, x: &[f64], v: &[f64]) -> f64 {
        self.inner(x, v, v).max(0.0).sqrt()
    }

    /// Checks exact symmetry and positive definiteness of `g(x)`.
    pub fn validate_at(&self, x: &[f64]) -> Result<(), GeometryError> {
        self.check_point(x)?;
        let n = self.dim();
        let mut g = vec![0.0; n * n];
        self.metric_raw(x, &mut g);
        for i in 0..n {
            for j in 0..i {
                if g[i * n + j] != g[j * n + i] {
                    return Err(GeometryError::NotSymmetric(x.to_vec()));
                }
            }
        }
        if linalg::cholesky(n, &g).is_none() {
            return Err(GeometryError::SingularMetric(x.to_vec()));
        }
        Ok(())
    }

    /// Largest discrepancy between the supplied closed-form derivative and
    /// central differences at `x`; `None` when no closed form exists.
    pub fn derivative_discrepancy(&self, x: &[f64]) -> Option<f64> {
        let n = self.dim();
        let mut exact = vec![0.0; n * n * n];
        let y = self.wrap(x);
        if !self.field.eval_deriv(&y, &mut exact) {
            return None;
        }
        let mut fd = vec![0.0; n * n * n];
        self.metric_deriv_fd(&y, &mut fd);
        Some(
            exact
                .iter()
                .zip(&fd)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
        )
    }

    /// An orthonormal frame for `g(p)`: columns `e_a` (row-major `n x n`
    /// storage, entry `[i * n + a]`) with `g(e_a, e_b) = delta_ab`.
    pub fn orthonormal_frame(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let n = self.dim();
        let mut g = vec![0.0; n * n];
        self.metric_raw(p, &mut g);
        let l = linalg::cholesky(n, &g).ok_or_else(|| GeometryError::SingularMetric(p.to_vec()))?;
        // E = L^{-T}: solve L^T E = I column by column.
        let mut e = vec![0.0; n * n];
        for a in 0..n {
            for i in (0..n).rev() {
                let mut s = if i == a { 1.0 } else { 0.0 };
                for k in i + 1..n {
                    s -= l[k * n + i] * e[k * n + a];
                }
                e[i * n + a] = s / l[i * n + i];
            }
        }
        Ok(e)
    }
}
