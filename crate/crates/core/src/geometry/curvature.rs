use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{gaussian, ChartedMetric, GeometryError};
use crate::linalg;
use crate::tolerances::TAU_PLANE;

/// Step for differentiating Christoffel symbols (relative to chart scale).
const DGAMMA_STEP: f64 = 1e-3;

/// Bounded number of plane redraws per sample in a curvature scan.
const MAX_PLANE_RETRIES: usize = 16;

/// Scratch buffers for repeated Christoffel evaluations at one dimension.
///
/// Hot loops (geodesic integration, tension fields) hold one workspace per
/// thread so no allocation happens per evaluation.
#[derive(Clone, Debug)]
pub struct CurvatureWorkspace {
    n: usize,
    g: Vec<f64>,
    dg: Vec<f64>,
    ginv: Vec<f64>,
    work: Vec<f64>,
    lowered: Vec<f64>,
}

impl CurvatureWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            g: vec![0.0; n * n],
            dg: vec![0.0; n * n * n],
            ginv: vec![0.0; n * n],
            work: vec![0.0; n * n],
            lowered: vec![0.0; n * n * n],
        }
    }

    /// Metric at the last successful [`Self::christoffel_into`] call.
    pub fn metric(&self) -> &[f64] {
        &self.g
    }

    /// Writes `Gamma^k_ij(x)` into `out[k*n*n + i*n + j]`. No domain check;
    /// returns `false` when `g(x)` is singular or not finite.
    pub fn christoffel_into(&mut self, m: &ChartedMetric, x: &[f64], out: &mut [f64]) -> bool {
        let n = self.n;
        m.metric_raw(x, &mut self.g);
        if !linalg::invert_into(n, &self.g, &mut self.ginv, &mut self.work) {
            return false;
        }
        m.metric_deriv_raw(x, &mut self.dg);
        let nn = n * n;
        // Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5
                        * (self.dg[i * nn + j * n + l] + self.dg[j * nn + i * n + l]
                            - self.dg[l * nn + i * n + j]);
                    self.lowered[l * nn + i * n + j] = v;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += self.ginv[k * n + l] * self.lowered[l * nn + i * n + j];
                    }
                    out[k * nn + i * n + j] = s;
                    out[k * nn + j * n + i] = s;
                }
            }
        }
        out[..n * nn].iter().all(|v| v.is_finite())
    }
}

/// Christoffel symbols of the second kind, `Gamma^k_ij` at
/// `[k * n * n + i * n + j]`.
pub fn christoffel(m: &ChartedMetric, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    m.check_point(x)?;
    let n = m.dim();
    let mut ws = CurvatureWorkspace::new(n);
    let mut out = vec![0.0; n * n * n];
    if !ws.christoffel_into(m, x, &mut out) {
        return Err(GeometryError::SingularMetric(x.to_vec()));
    }
    Ok(out)
}

/// Fully lowered Riemann tensor `R_ijkl = g(R(d_i, d_j) d_k, d_l)` at
/// `[((i * n + j) * n + k) * n + l]`, with `R(X, Y) = [nabla_X, nabla_Y] -
/// nabla_[X,Y]`. With this convention `K(v, w) = R(v, w, w, v) / |v ^ w|^2`
/// is positive on spheres.
pub fn riemann(m: &ChartedMetric, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    m.check_point(x)?;
    let n = m.dim();
    let nn = n * n;
    let nnn = nn * n;
    let mut ws = CurvatureWorkspace::new(n);
    let mut gamma = vec![0.0; nnn];
    if !ws.christoffel_into(m, x, &mut gamma) {
        return Err(GeometryError::SingularMetric(x.to_vec()));
    }
    let g = ws.metric().to_vec();

    // dgamma[a * nnn + (l*nn + j*n + k)] = d_a Gamma^l_jk, fourth order.
    let h = DGAMMA_STEP * m.domain().scale(m.periodicity()).min(1.0);
    let mut dgamma = vec![0.0; n * nnn];
    let mut xs = x.to_vec();
    let mut tmp = vec![0.0; nnn];
    let offsets = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
    for a in 0..n {
        for &(s, c) in &offsets {
            xs[a] = x[a] + s * h;
            if !ws.christoffel_into(m, &xs, &mut tmp) {
                return Err(GeometryError::SingularMetric(xs.clone()));
            }
            for idx in 0..nnn {
                dgamma[a * nnn + idx] += c * tmp[idx] / (12.0 * h);
            }
        }
        xs[a] = x[a];
    }

    // R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    let mut r_up = vec![0.0; nn * nn];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dgamma[i * nnn + l * nn + j * n + k]
                        - dgamma[j * nnn + l * nn + i * n + k];
                    for mm in 0..n {
                        v += gamma[l * nn + i * n + mm] * gamma[mm * nn + j * n + k]
                            - gamma[l * nn + j * n + mm] * gamma[mm * nn + i * n + k];
                    }
                    r_up[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    let mut r = vec![0.0; nn * nn];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for mm in 0..n {
                        v += g[l * n + mm] * r_up[((i * n + j) * n + k) * n + mm];
                    }
                    r[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    Ok(r)
}

/// Christoffel symbols, lowered Riemann tensor and metric at a point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub dim: usize,
    pub metric: Vec<f64>,
    pub christoffel: Vec<f64>,
    pub riemann: Vec<f64>,
}

impl CurvatureReport {
    /// Sectional curvature of the plane spanned by `v` and `w`.
    pub fn sectional(&self, v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
        sectional_from(self.dim, &self.metric, &self.riemann, v, w)
    }

    /// Largest violation of the algebraic Riemann symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim;
        let r = |i: usize, j: usize, k: usize, l: usize| self.riemann[((i * n + j) * n + k) * n + l];
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = r(i, j, k, l);
                        worst = worst
                            .max((v + r(j, i, k, l)).abs())
                            .max((v + r(i, j, l, k)).abs())
                            .max((v - r(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}

pub fn curvature_report(m: &ChartedMetric, x: &[f64]) -> Result<CurvatureReport, GeometryError> {
    let christoffel = christoffel(m, x)?;
    let riemann = riemann(m, x)?;
    let n = m.dim();
    let mut metric = vec![0.0; n * n];
    m.metric_raw(x, &mut metric);
    Ok(CurvatureReport {
        point: x.to_vec(),
        dim: n,
        metric,
        christoffel,
        riemann,
    })
}

fn gram(n: usize, g: &[f64], v: &[f64], w: &[f64]) -> (f64, f64) {
    let vv = linalg::bilinear(n, g, v, v);
    let ww = linalg::bilinear(n, g, w, w);
    let vw = linalg::bilinear(n, g, v, w);
    (vv * ww - vw * vw, vv * ww)
}

fn sectional_from(n: usize, g: &[f64], r: &[f64], v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
    if v.len() != n || w.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: v.len().min(w.len()),
        });
    }
    let (det, scale) = gram(n, g, v, w);
    if !(det > TAU_PLANE * scale) {
        return Err(GeometryError::DegeneratePlane { gram: det });
    }
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = v[i] * w[j];
            if a == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    num += r[((i * n + j) * n + k) * n + l] * a * w[k] * v[l];
                }
            }
        }
    }
    Ok(num / det)
}

/// Sectional curvature `K(v, w)` at `x`.
pub fn sectional_curvature(
    m: &ChartedMetric,
    x: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64, GeometryError> {
    m.check_point(x)?;
    let n = m.dim();
    let mut g = vec![0.0; n * n];
    m.metric_raw(x, &mut g);
    // Reject degenerate planes before paying for the Riemann tensor.
    let (det, scale) = gram(n, &g, v, w);
    if !(det > TAU_PLANE * scale) {
        return Err(GeometryError::DegeneratePlane { gram: det });
    }
    let r = riemann(m, x)?;
    sectional_from(n, &g, &r, v, w)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub k: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBounds {
    pub k_min: f64,
    pub k_max: f64,
    pub samples: Vec<CurvatureSample>,
}

/// Fraction of the chart (about its centre) from which scan points are drawn,
/// keeping difference stencils away from the chart boundary.
pub const SCAN_SHRINK: f64 = 0.8;

/// Empirical sectional-curvature range over random points and planes.
///
/// Inputs are drawn serially from a ChaCha stream seeded by `seed`, then
/// evaluated in parallel and collected in input order, so the result does not
/// depend on the thread count.
pub fn curvature_bounds_scan(
    m: &ChartedMetric,
    sample_count: usize,
    seed: u64,
) -> Result<CurvatureBounds, GeometryError> {
    if sample_count == 0 {
        return Err(GeometryError::ScanFailed("sample_count must be at least 1".into()));
    }
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(sample_count);
    let mut g = vec![0.0; n * n];
    for _ in 0..sample_count {
        let x = m.domain().sample(&mut rng, SCAN_SHRINK, m.periodicity());
        m.metric_raw(&x, &mut g);
        let mut plane = None;
        for _ in 0..MAX_PLANE_RETRIES {
            let v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            let w: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            let (det, scale) = gram(n, &g, &v, &w);
            if det > 1e3 * TAU_PLANE * scale {
                plane = Some((v, w));
                break;
            }
        }
        let (v, w) = plane.ok_or_else(|| {
            GeometryError::ScanFailed(format!("no nondegenerate plane found at {x:?}"))
        })?;
        inputs.push((x, v, w));
    }
    let samples: Vec<CurvatureSample> = inputs
        .into_par_iter()
        .map(|(x, v, w)| {
            let k = sectional_curvature(m, &x, &v, &w)?;
            Ok(CurvatureSample { point: x, v, w, k })
        })
        .collect::<Result<_, GeometryError>>()?;
    let k_min = samples.iter().map(|s| s.k).fold(f64::INFINITY, f64::min);
    let k_max = samples.iter().map(|s| s.k).fold(f64::NEG_INFINITY, f64::max);
    Ok(CurvatureBounds {
        k_min,
        k_max,
        samples,
    })
}
