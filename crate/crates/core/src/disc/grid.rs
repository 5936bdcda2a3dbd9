use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::DiscError;
use crate::linalg::BandCholesky;

/// Neighbour directions of an interior node, in this order.
pub const DIRECTIONS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Masked Cartesian lattice on the closed unit disc.
///
/// Interior nodes are lattice points with `|x| < 1 - h/2`. Wherever the
/// lattice edge leaving an interior node reaches a non-interior point, a
/// boundary node is placed where that grid line crosses the unit circle, at
/// distance `b` (between roughly `h/2` and `3h/2`) from the interior node.
///
/// Two discrete Laplacians live on the grid: the Shortley-Weller stencil of
/// [`DiscGrid::laplacian_weights`] (exact on quadratics, used by the tension
/// field) and a symmetric one with edge coefficients `1/h^2` between
/// interior nodes and `1/(h b)` on rim edges (exact on affine functions,
/// matching the edge energy, factored once for preconditioning).
#[derive(Debug)]
pub struct DiscGrid {
    resolution: usize,
    h: f64,
    nodes: Vec<[f64; 2]>,
    n_interior: usize,
    /// `(neighbour, distance)` per interior node, in [`DIRECTIONS`] order.
    neighbors: Vec<[(usize, f64); 4]>,
    origin: usize,
    /// Lattice `(i, j)` (row-major, `j * N + i`) to interior index.
    lattice: Vec<Option<usize>>,
    /// Cholesky factor of `-h^2 L` restricted to interior nodes.
    poisson: BandCholesky,
}

impl DiscGrid {
    pub fn new(resolution: usize) -> Result<Self, DiscError> {
        if resolution < 5 || resolution % 2 == 0 {
            return Err(DiscError::InvalidResolution(resolution));
        }
        let n = resolution;
        let h = 2.0 / (n - 1) as f64;
        let coord = |i: usize| -1.0 + i as f64 * h;
        let inside = |i: i64, j: i64| -> bool {
            if i < 0 || j < 0 || i >= n as i64 || j >= n as i64 {
                return false;
            }
            let (x, y) = (coord(i as usize), coord(j as usize));
            (x * x + y * y).sqrt() < 1.0 - 0.5 * h
        };
        let mut lattice = vec![None; n * n];
        let mut nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if inside(i as i64, j as i64) {
                    lattice[j * n + i] = Some(nodes.len());
                    nodes.push([coord(i), coord(j)]);
                }
            }
        }
        let n_interior = nodes.len();
        let mut neighbors = Vec::with_capacity(n_interior);
        for j in 0..n {
            for i in 0..n {
                let Some(_) = lattice[j * n + i] else { continue };
                let (x, y) = (coord(i), coord(j));
                let mut nb = [(0usize, 0.0f64); 4];
                for (d, &(di, dj)) in DIRECTIONS.iter().enumerate() {
                    let (ni, nj) = (i as i64 + di as i64, j as i64 + dj as i64);
                    if inside(ni, nj) {
                        nb[d] = (lattice[nj as usize * n + ni as usize].unwrap(), h);
                    } else {
                        // Crossing of the grid line with the unit circle.
                        let (px, py) = if di != 0 {
                            let xb = (1.0 - y * y).max(0.0).sqrt() * di as f64;
                            (xb, y)
                        } else {
                            let yb = (1.0 - x * x).max(0.0).sqrt() * dj as f64;
                            (x, yb)
                        };
                        let b = ((px - x).powi(2) + (py - y).powi(2)).sqrt();
                        nb[d] = (nodes.len(), b);
                        nodes.push([px, py]);
                    }
                }
                neighbors.push(nb);
            }
        }
        let mid = (n - 1) / 2;
        let origin = lattice[mid * n + mid].expect("odd resolution has a centre node");

        // -h^2 L on interior nodes, as a lower band.
        let mut bw = 0;
        for (i, nb) in neighbors.iter().enumerate() {
            for &(k, _) in nb {
                if k < n_interior && k < i {
                    bw = bw.max(i - k);
                }
            }
        }
        let w = bw + 1;
        let mut band = vec![0.0; n_interior * w];
        for (i, nb) in neighbors.iter().enumerate() {
            let mut diag = 0.0;
            for &(k, dist) in nb {
                if k < n_interior {
                    diag += 1.0;
                    if k < i {
                        band[i * w + (k + bw - i)] = -1.0;
                    }
                } else {
                    diag += h / dist;
                }
            }
            band[i * w + bw] = diag;
        }
        let poisson = BandCholesky::factor(n_interior, bw, band)
            .expect("discrete Dirichlet Laplacian is positive definite");
        Ok(Self {
            resolution: n,
            h,
            nodes,
            n_interior,
            neighbors,
            origin,
            lattice,
            poisson,
        })
    }

    /// Process-wide cache of grids by resolution.
    pub fn shared(resolution: usize) -> Result<Arc<Self>, DiscError> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DiscGrid>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(g) = cache.lock().expect("grid cache poisoned").get(&resolution) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(Self::new(resolution)?);
        cache
            .lock()
            .expect("grid cache poisoned")
            .entry(resolution)
            .or_insert_with(|| Arc::clone(&g));
        Ok(g)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.nodes.len() - self.n_interior
    }

    pub fn is_interior(&self, node: usize) -> bool {
        node < self.n_interior
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn neighbors(&self, interior: usize) -> &[(usize, f64); 4] {
        &self.neighbors[interior]
    }

    /// Interior node at lattice position `(i, j)`, if any.
    pub fn lattice_node(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.resolution || j >= self.resolution {
            return None;
        }
        self.lattice[j * self.resolution + i]
    }

    /// Symmetric edge coefficient for a neighbour at distance `dist`
    /// (`1/h^2`, or `1/(h dist)` on rim edges): the operator behind the
    /// energy and [`Self::solve_laplacian`].
    #[inline]
    pub fn edge_coefficient(&self, dist: f64) -> f64 {
        if dist == self.h {
            1.0 / (self.h * self.h)
        } else {
            1.0 / (self.h * dist)
        }
    }

    /// Shortley-Weller weights of the five-point Laplacian at an interior
    /// node, in [`DIRECTIONS`] order: `2 / (a (a + b))` for a neighbour at
    /// distance `a` whose opposite neighbour is at distance `b`. Exact on
    /// quadratics; equal to `1/h^2` away from the rim.
    #[inline]
    pub fn laplacian_weights(&self, interior: usize) -> [f64; 4] {
        let nb = &self.neighbors[interior];
        let mut w = [0.0; 4];
        for d in 0..4 {
            let a = nb[d].1;
            let b = nb[d ^ 1].1;
            w[d] = 2.0 / (a * (a + b));
        }
        w
    }

    /// Solves `L x = rhs` on interior nodes (zero boundary data), in place.
    pub fn solve_laplacian(&self, x: &mut [f64]) {
        self.poisson.solve_in_place(x);
        let s = -self.h * self.h;
        x.iter_mut().for_each(|v| *v *= s);
    }

    /// Every edge `(a, b, kappa)` once, with `a` interior and
    /// `kappa = h / length`: the quadrature weight of the edge energy.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(move |(i, nb)| {
            nb.iter().filter_map(move |&(k, dist)| {
                if k >= self.n_interior || k > i {
                    Some((i, k, self.h / dist))
                } else {
                    None
                }
            })
        })
    }

    /// Bilinear interpolation weights for the lattice cell containing
    /// `(x, y)`; `None` unless all four corners are interior nodes.
    pub fn cell_weights(&self, x: f64, y: f64) -> Option<[(usize, f64); 4]> {
        let sx = (x + 1.0) / self.h;
        let sy = (y + 1.0) / self.h;
        if !(sx >= 0.0 && sy >= 0.0) {
            return None;
        }
        let (i, j) = (sx.floor() as usize, sy.floor() as usize);
        let (tx, ty) = (sx - i as f64, sy - j as f64);
        let a = self.lattice_node(i, j)?;
        let b = self.lattice_node(i + 1, j)?;
        let c = self.lattice_node(i, j + 1)?;
        let d = self.lattice_node(i + 1, j + 1)?;
        Some([
            (a, (1.0 - tx) * (1.0 - ty)),
            (b, tx * (1.0 - ty)),
            (c, (1.0 - tx) * ty),
            (d, tx * ty),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_structure() {
        let g = DiscGrid::new(17).unwrap();
        assert_eq!(g.node(g.origin()), [0.0, 0.0]);
        for i in 0..g.n_interior() {
            let [x, y] = g.node(i);
            assert!((x * x + y * y).sqrt() < 1.0 - g.spacing() / 2.0);
            for &(k, d) in g.neighbors(i) {
                assert!(d > 0.3 * g.spacing() && d < 2.0 * g.spacing());
                if !g.is_interior(k) {
                    let [bx, by] = g.node(k);
                    assert!(((bx * bx + by * by).sqrt() - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(DiscGrid::new(16).is_err());
    }

    #[test]
    fn laplacian_is_exact_on_affine_functions() {
        let g = DiscGrid::new(21).unwrap();
        let f = |p: [f64; 2]| 0.3 + 2.0 * p[0] - 1.5 * p[1];
        for i in 0..g.n_interior() {
            let c = f(g.node(i));
            let lap: f64 = g
                .neighbors(i)
                .iter()
                .map(|&(k, d)| g.edge_coefficient(d) * (f(g.node(k)) - c))
                .sum();
            assert!(lap.abs() < 1e-9, "{lap}");
        }
    }

    #[test]
    fn shortley_weller_stencil_is_exact_on_quadratics() {
        let g = DiscGrid::new(21).unwrap();
        let f = |p: [f64; 2]| 0.3 + p[0] - 2.0 * p[1] + 1.5 * p[0] * p[0] + 0.5 * p[1] * p[1] + 0.7 * p[0] * p[1];
        for i in 0..g.n_interior() {
            let c = f(g.node(i));
            let lap: f64 = g
                .neighbors(i)
                .iter()
                .zip(g.laplacian_weights(i))
                .map(|(&(k, _), w)| w * (f(g.node(k)) - c))
                .sum();
            assert!((lap - 4.0).abs() < 1e-8, "{lap}");
        }
    }

    #[test]
    fn poisson_solve_inverts_laplacian() {
        let g = DiscGrid::new(15).unwrap();
        let rhs: Vec<f64> = (0..g.n_interior()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = rhs.clone();
        g.solve_laplacian(&mut x);
        for i in 0..g.n_interior() {
            let lap: f64 = g
                .neighbors(i)
                .iter()
                .map(|&(k, d)| {
                    let xk = if g.is_interior(k) { x[k] } else { 0.0 };
                    g.edge_coefficient(d) * (xk - x[i])
                })
                .sum();
            assert!((lap - rhs[i]).abs() < 1e-8);
        }
    }
}
