use std::sync::Arc;

use super::{DiscError, DiscGrid};
use crate::geometry::ChartedMetric;

/// A map from the disc lattice into a chart.
///
/// Values are stored node-major (`values[node * n + k]`). On periodic charts
/// they are kept in lifted coordinates so that differences along the grid
/// are honest displacements; the metric wraps them on evaluation.
#[derive(Clone, Debug)]
pub struct DiscMap {
    grid: Arc<DiscGrid>,
    target: ChartedMetric,
    values: Vec<f64>,
}

impl DiscMap {
    pub fn new(grid: Arc<DiscGrid>, target: ChartedMetric, values: Vec<f64>) -> Result<Self, DiscError> {
        let n = target.dim();
        if values.len() != grid.n_nodes() * n {
            return Err(DiscError::ShapeMismatch {
                expected: grid.n_nodes() * n,
                got: values.len(),
            });
        }
        let map = Self { grid, target, values };
        map.check_in_chart()?;
        Ok(map)
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(
        grid: Arc<DiscGrid>,
        target: ChartedMetric,
        f: impl Fn(f64, f64) -> Vec<f64>,
    ) -> Result<Self, DiscError> {
        let n = target.dim();
        let mut values = Vec::with_capacity(grid.n_nodes() * n);
        for &[x, y] in grid.nodes() {
            let v = f(x, y);
            if v.len() != n {
                return Err(DiscError::ShapeMismatch { expected: n, got: v.len() });
            }
            values.extend_from_slice(&v);
        }
        Self::new(grid, target, values)
    }

    /// The constant map at `p`.
    pub fn constant(grid: Arc<DiscGrid>, target: ChartedMetric, p: &[f64]) -> Result<Self, DiscError> {
        let p = p.to_vec();
        Self::from_fn(grid, target, move |_, _| p.clone())
    }


    pub fn check_in_chart(&self) -> Result<(), DiscError> {
        let n = self.dim();
        for node in 0..self.grid.n_nodes() {
            let p = &self.values[node * n..(node + 1) * n];
            if !self.target.contains(p) {
                return Err(DiscError::OutOfChart {
                    node,
                    point: p.to_vec(),
                });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn target(&self) -> &ChartedMetric {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, node: usize) -> &[f64] {
        let n = self.dim();
        &self.values[node * n..(node + 1) * n]
    }

    /// `u(0)`.
    pub fn center(&self) -> &[f64] {
        self.value(self.grid.origin())
    }

    /// Same grid and target with new values (no chart check).
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            target: self.target.clone(),
            values,
        }
    }

    /// The same map regarded as a map into another chart metric of the
    /// same dimension (e.g. a sub-domain restriction).
    pub fn retarget(&self, target: ChartedMetric) -> Result<Self, DiscError> {
        Self::new(Arc::clone(&self.grid), target, self.values.clone())
    }

    /// First derivatives `(u_x, u_y)` at an interior node, from three-point
    /// differences that are exact on quadratics along each grid line.
    pub fn derivatives(&self, interior: usize, ux: &mut [f64], uy: &mut [f64]) {
        derivatives_of(&self.grid, &self.values, self.dim(), interior, ux, uy);
    }

    /// `du(0) e_1` and `du(0) e_2`.
    pub fn differential_at_origin(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut ux = vec![0.0; n];
        let mut uy = vec![0.0; n];
        self.derivatives(self.grid.origin(), &mut ux, &mut uy);
        (ux, uy)
    }

    /// Bilinear interpolation at `(x, y)`; `None` near the rim where the
    /// lattice cell is not fully interior.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<Vec<f64>> {
        let n = self.dim();
        let w = self.grid.cell_weights(x, y)?;
        let mut out = vec![0.0; n];
        for (node, wt) in w {
            for k in 0..n {
                out[k] += wt * self.values[node * n + k];
            }
        }
        Some(out)
    }

    /// Sup-norm distance between the values of two maps on the same grid.
    pub fn sup_distance(&self, other: &DiscMap) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub(crate) fn derivatives_of(grid: &DiscGrid, values: &[f64], n: usize, i: usize, ux: &mut [f64], uy: &mut [f64]) {
    let nb = grid.neighbors(i);
    let c = &values[i * n..(i + 1) * n];
    for (axis, out) in [(0usize, ux), (1usize, uy)] {
        let (r, a) = nb[2 * axis];
        let (l, b) = nb[2 * axis + 1];
        let ur = &values[r * n..(r + 1) * n];
        let ul = &values[l * n..(l + 1) * n];
        let denom = a * b * (a + b);
        for k in 0..n {
            out[k] = (b * b * (ur[k] - c[k]) - a * a * (ul[k] - c[k])) / denom;
        }
    }
}
