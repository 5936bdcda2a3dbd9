use serde::{Deserialize, Serialize};

use super::DiscMap;

const EPS_REG: f64 = 1e-300;

/// `(|F| + |E - G|) / (E + G)` for the first fundamental form
/// `E = |u_x|^2, F = g(u_x, u_y), G = |u_y|^2`: zero exactly when the
/// pullback metric is a multiple of the flat one.
pub fn node_defect(e: f64, f: f64, gg: f64) -> f64 {
    (f.abs() + (e - gg).abs()) / (e + gg + EPS_REG)
}

fn fundamental_forms(u: &DiscMap) -> Vec<(f64, f64, f64)> {
    let n = u.dim();
    let mut ux = vec![0.0; n];
    let mut uy = vec![0.0; n];
    let mut g = vec![0.0; n * n];
    (0..u.grid().n_interior())
        .map(|i| {
            u.derivatives(i, &mut ux, &mut uy);
            u.target().metric_raw(u.value(i), &mut g);
            let e = crate::linalg::bilinear(n, &g, &ux, &ux);
            let f = crate::linalg::bilinear(n, &g, &ux, &uy);
            let gg = crate::linalg::bilinear(n, &g, &uy, &uy);
            (e, f, gg)
        })
        .collect()
}

/// Sup over interior nodes of [`node_defect`]. Scale invariant; branch
/// points (vanishing differential) contribute 0.
pub fn conformality_defect(u: &DiscMap) -> f64 {
    fundamental_forms(u)
        .into_iter()
        .map(|(e, f, g)| node_defect(e, f, g))
        .fold(0.0, f64::max)
}

/// Outcome of [`weakly_conformal_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakConformality {
    pub passes: bool,
    /// Fitted conformal factor `phi = |u_x|_g^2` per interior node.
    pub phi: Vec<f64>,
    pub worst_node: usize,
    pub worst_defect: f64,
}

/// Checks `u^* g = phi ds^2` nodewise: a node passes when its defect is at
/// most `tau_c`, or when both `|u_x|_g` and `|u_y|_g` are at most `tau_c`
/// (a branch point).
pub fn weakly_conformal_check(u: &DiscMap, tau_c: f64) -> WeakConformality {
    let forms = fundamental_forms(u);
    let mut passes = true;
    let mut worst_node = 0;
    let mut worst_defect = 0.0;
    let mut phi = Vec::with_capacity(forms.len());
    for (i, &(e, f, g)) in forms.iter().enumerate() {
        phi.push(e);
        let branch = e.sqrt() <= tau_c && g.sqrt() <= tau_c;
        let d = if branch { 0.0 } else { node_defect(e, f, g) };
        if d > worst_defect {
            worst_defect = d;
            worst_node = i;
        }
        if d > tau_c {
            passes = false;
        }
    }
    WeakConformality {
        passes,
        phi,
        worst_node,
        worst_defect,
    }
}
