use serde::{Deserialize, Serialize};

use crate::disc::DiscMap;

/// Relative slack allowed on the Schwarz bound.
pub const TAU_SCHWARZ: f64 = 1e-2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchwarzReport {
    pub passes: bool,
    /// `max g(u)(u_x, u_x) (1 - |z|^2)^2 c / 8` over interior nodes.
    pub worst_ratio: f64,
    pub worst_node: usize,
}

/// Nodewise check of `u^* g <= (8 / c) g_D` with `g_D = |dz|^2 / (1 - |z|^2)^2`,
/// read on `u_x` (the disc is conformal).
pub fn schwarz_check(u: &DiscMap, c: f64) -> SchwarzReport {
    let n = u.dim();
    let grid = u.grid();
    let mut ux = vec![0.0; n];
    let mut uy = vec![0.0; n];
    let mut worst_ratio = 0.0;
    let mut worst_node = 0;
    for i in 0..grid.n_interior() {
        u.derivatives(i, &mut ux, &mut uy);
        let [x, y] = grid.node(i);
        let s = 1.0 - x * x - y * y;
        let e = u.target().inner(u.value(i), &ux, &ux);
        let ratio = e * s * s * c / 8.0;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_node = i;
        }
    }
    SchwarzReport {
        passes: worst_ratio <= 1.0 + TAU_SCHWARZ,
        worst_ratio,
        worst_node,
    }
}
