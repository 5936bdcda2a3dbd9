use std::sync::Arc;

use rayon::prelude::*;

use super::{ChartDomain, ChartedMetric, GeometryError, MetricField};

/// A metric sampled on a regular lattice and reconstructed by tensor-product
/// Catmull-Rom interpolation (C^1, exact for quadratics).
///
/// Used to freeze expensive metrics — pullbacks through the exponential map —
/// before running solvers that evaluate the metric millions of times.
#[derive(Clone, Debug)]
pub struct TabulatedMetric {
    n: usize,
    /// Lattice coordinate of index 0 on every axis.
    origin: f64,
    spacing: f64,
    count: usize,
    /// Upper-triangular components per lattice node.
    values: Vec<f64>,
    ncomp: usize,
}

fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

fn dweights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ]
}

impl TabulatedMetric {
    /// Samples `source` on a lattice of the given `spacing` covering the
    /// ball of radius `radius` about the origin, and returns the
    /// interpolated metric on that ball.
    ///
    /// `source` must be evaluable within distance `radius + 2 sqrt(n)
    /// spacing` of the origin.
    pub fn sample(
        source: &ChartedMetric,
        radius: f64,
        spacing: f64,
    ) -> Result<ChartedMetric, GeometryError> {
        if !(radius > 0.0 && spacing > 0.0) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        let n = source.dim();
        let half = (radius / spacing).ceil() as usize + 2;
        let count = 2 * half + 1;
        let origin = -(half as f64) * spacing;
        let reach = radius + 2.0 * (n as f64).sqrt() * spacing * 1.0001;
        let ncomp = n * (n + 1) / 2;
        let total = count.pow(n as u32);
        let rows: Vec<Vec<f64>> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let x = lattice_point(idx, n, count, origin, spacing);
                if crate::linalg::norm2(&x) > reach {
                    return vec![f64::NAN; ncomp];
                }
                let mut g = vec![0.0; n * n];
                source.metric_raw(&x, &mut g);
                let mut row = Vec::with_capacity(ncomp);
                for i in 0..n {
                    for j in i..n {
                        row.push(g[i * n + j]);
                    }
                }
                row
            })
            .collect();
        for (idx, row) in rows.iter().enumerate() {
            let x = lattice_point(idx, n, count, origin, spacing);
            if crate::linalg::norm2(&x) <= reach && row.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::OutOfChart(x));
            }
        }
        let table = TabulatedMetric {
            n,
            origin,
            spacing,
            count,
            values: rows.concat(),
            ncomp,
        };
        Ok(ChartedMetric::new(
            format!("{}|tab", source.name()),
            ChartDomain::ball(vec![0.0; n], radius),
            Arc::new(table),
        ))
    }

    fn interpolate(&self, x: &[f64], g: &mut [f64], dg: Option<&mut [f64]>) {
        let n = self.n;
        let mut base = vec![0usize; n];
        let mut w = vec![[0.0; 4]; n];
        let mut dw = vec![[0.0; 4]; n];
        for a in 0..n {
            let s = (x[a] - self.origin) / self.spacing;
            let i = (s.floor() as isize).clamp(1, self.count as isize - 3) as usize;
            let t = s - i as f64;
            base[a] = i - 1;
            w[a] = weights(t);
            dw[a] = dweights(t);
        }
        let nc = self.ncomp;
        let mut acc = vec![0.0; nc];
        let want_d = dg.is_some();
        let mut dacc = vec![0.0; if want_d { nc * n } else { 0 }];
        let stencil = 4usize.pow(n as u32);
        let mut off = vec![0usize; n];
        for s in 0..stencil {
            let mut rem = s;
            for o in off.iter_mut() {
                *o = rem % 4;
                rem /= 4;
            }
            let mut node = 0;
            let mut weight = 1.0;
            for a in 0..n {
                node = node * self.count + base[a] + off[a];
                weight *= w[a][off[a]];
            }
            let vals = &self.values[node * nc..(node + 1) * nc];
            for c in 0..nc {
                acc[c] += weight * vals[c];
            }
            if want_d {
                for k in 0..n {
                    let mut wk = dw[k][off[k]] / self.spacing;
                    for a in 0..n {
                        if a != k {
                            wk *= w[a][off[a]];
                        }
                    }
                    for c in 0..nc {
                        dacc[k * nc + c] += wk * vals[c];
                    }
                }
            }
        }
        let mut c = 0;
        for i in 0..n {
            for j in i..n {
                g[i * n + j] = acc[c];
                g[j * n + i] = acc[c];
                c += 1;
            }
        }
        if let Some(dg) = dg {
            for k in 0..n {
                let mut c = 0;
                for i in 0..n {
                    for j in i..n {
                        dg[k * n * n + i * n + j] = dacc[k * nc + c];
                        dg[k * n * n + j * n + i] = dacc[k * nc + c];
                        c += 1;
                    }
                }
            }
        }
    }
}

fn lattice_point(mut idx: usize, n: usize, count: usize, origin: f64, spacing: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for a in (0..n).rev() {
        x[a] = origin + (idx % count) as f64 * spacing;
        idx /= count;
    }
    x
}

impl MetricField for TabulatedMetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.interpolate(x, out, None);
    }

    fn eval_deriv(&self, x: &[f64], out: &mut [f64]) -> bool {
        let mut g = vec![0.0; self.n * self.n];
        self.interpolate(x, &mut g, Some(out));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::models;

    #[test]
    fn reproduces_smooth_metric() {
        let m = models::hyperbolic_ball(2);
        let tab = TabulatedMetric::sample(&m, 0.4, 0.02).unwrap();
        for x in [[0.007, 0.003], [0.13, -0.27], [0.301, 0.213]] {
            let a = tab.metric(&x).unwrap();
            let b = m.metric(&x).unwrap();
            assert!((a - b).abs().max() < 1e-4);
            let d = tab.derivative_discrepancy(&x).unwrap();
            assert!(d < 1e-6, "{d}");
        }
    }
}
