use super::map::derivatives_of;
use super::{DiscError, DiscMap};
use crate::geometry::CurvatureWorkspace;
use crate::linalg;

/// Tension field `tau^k = Lap u^k + Gamma^k_ij(u) (u_x^i u_x^j + u_y^i u_y^j)`
/// at every interior node, node-major (`out[node * n + k]`).
///
/// `Lap` is the Shortley-Weller five-point Laplacian (exact on quadratics,
/// also next to the rim) and the first derivatives
/// are the three-point differences of [`DiscMap::derivatives`], so linear
/// maps into conformally flat surfaces have exactly vanishing tension.
pub fn tension_field(u: &DiscMap) -> Result<Vec<f64>, DiscError> {
    let mut out = vec![0.0; u.grid().n_interior() * u.dim()];
    let mut ws = TensionWorkspace::new(u.dim());
    ws.eval(u, u.values(), &mut out)?;
    Ok(out)
}

/// `sup |tau|` over interior nodes and components.
pub fn tension_residual(u: &DiscMap) -> Result<f64, DiscError> {
    Ok(linalg::sup_norm(&tension_field(u)?))
}

pub(crate) struct TensionWorkspace {
    n: usize,
    curv: CurvatureWorkspace,
    gamma: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl TensionWorkspace {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            curv: CurvatureWorkspace::new(n),
            gamma: vec![0.0; n * n * n],
            ux: vec![0.0; n],
            uy: vec![0.0; n],
        }
    }

    /// Tension of the map with the given node values (grid and target taken
    /// from `u`).
    pub(crate) fn eval(&mut self, u: &DiscMap, values: &[f64], out: &mut [f64]) -> Result<(), DiscError> {
        let n = self.n;
        let nn = n * n;
        let grid = u.grid();
        let target = u.target();
        for i in 0..grid.n_interior() {
            let c = &values[i * n..(i + 1) * n];
            let o = &mut out[i * n..(i + 1) * n];
            o.fill(0.0);
            let weights = grid.laplacian_weights(i);
            for (&(k, _), w) in grid.neighbors(i).iter().zip(weights) {
                for a in 0..n {
                    o[a] += w * (values[k * n + a] - c[a]);
                }
            }
            if !self.curv.christoffel_into(target, c, &mut self.gamma) {
                return Err(DiscError::SingularMetric { node: i });
            }
            derivatives_of(grid, values, n, i, &mut self.ux, &mut self.uy);
            for k in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += self.gamma[k * nn + a * n + b] * (self.ux[a] * self.ux[b] + self.uy[a] * self.uy[b]);
                    }
                }
                o[k] += s;
            }
        }
        Ok(())
    }
}
