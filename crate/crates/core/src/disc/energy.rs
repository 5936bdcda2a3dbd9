use super::DiscMap;

/// Discrete Dirichlet energy `E(u) = int_D |du|_g^2 dm`.
///
/// Each lattice edge contributes `kappa * g_mid(delta, delta)` where `delta`
/// is the value difference along the edge, `g_mid` the average of the
/// metric at its two ends and `kappa = h / length` the edge weight, so that
/// `kappa * |delta|^2` approximates `h^2 |d_e u|^2`. In a flat target the
/// gradient of this sum is `-2 h^2` times the five-point Laplacian.
pub fn energy(u: &DiscMap) -> f64 {
    energy_of(u, u.values())
}

pub(crate) fn energy_of(u: &DiscMap, values: &[f64]) -> f64 {
    let n = u.dim();
    let grid = u.grid();
    let target = u.target();
    let nn = n * n;
    let mut g = vec![0.0; grid.n_nodes() * nn];
    for node in 0..grid.n_nodes() {
        target.metric_raw(&values[node * n..(node + 1) * n], &mut g[node * nn..(node + 1) * nn]);
    }
    let mut delta = vec![0.0; n];
    let mut total = 0.0;
    for (a, b, kappa) in grid.edges() {
        for k in 0..n {
            delta[k] = values[b * n + k] - values[a * n + k];
        }
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += 0.5 * (g[a * nn + i * n + j] + g[b * nn + i * n + j]) * delta[i] * delta[j];
            }
        }
        total += kappa * s;
    }
    total
}
