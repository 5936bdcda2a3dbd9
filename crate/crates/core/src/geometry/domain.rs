use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;

/// Coordinate region of a chart.
///
/// Periodic axes (see [`super::ChartedMetric::periodicity`]) are ignored by
/// the membership tests: a torus chart is the whole covering space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartDomain {
    /// Axis-aligned open box `lo < x < hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Open ellipsoid `{x : (x - c)^T Q (x - c) < radius^2}` with `Q`
    /// row-major symmetric positive definite.
    Ellipsoid {
        center: Vec<f64>,
        form: Vec<f64>,
        radius: f64,
    },
}

impl ChartDomain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        ChartDomain::Ball { center, radius }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        ChartDomain::Box {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ChartDomain::Box { lo, .. } => lo.len(),
            ChartDomain::Ball { center, .. } | ChartDomain::Ellipsoid { center, .. } => {
                center.len()
            }
        }
    }

    /// Normalised depth of `x`: 1 at the centre, 0 on the boundary,
    /// negative outside. Periodic axes do not constrain the depth.
    pub fn depth(&self, x: &[f64], periodic: &[Option<f64>]) -> f64 {
        let is_periodic = |i: usize| periodic.get(i).copied().flatten().is_some();
        match self {
            ChartDomain::Box { lo, hi } => {
                let mut d = 1.0_f64;
                for i in 0..lo.len() {
                    if is_periodic(i) {
                        continue;
                    }
                    let half = 0.5 * (hi[i] - lo[i]);
                    let di = (x[i] - lo[i]).min(hi[i] - x[i]) / half;
                    d = d.min(di);
                }
                d
            }
            ChartDomain::Ball { center, radius } => {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .enumerate()
                    .filter(|(i, _)| !is_periodic(*i))
                    .map(|(_, (a, c))| (a - c) * (a - c))
                    .sum();
                1.0 - r2.sqrt() / radius
            }
            ChartDomain::Ellipsoid {
                center,
                form,
                radius,
            } => {
                let n = center.len();
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let q = linalg::bilinear(n, form, &d, &d).max(0.0);
                1.0 - q.sqrt() / radius
            }
        }
    }

    pub fn contains(&self, x: &[f64], periodic: &[Option<f64>]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.depth(x, periodic) > 0.0
    }

    /// Membership in the domain shrunk by the relative `margin`.
    pub fn contains_with_margin(&self, x: &[f64], periodic: &[Option<f64>], margin: f64) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.depth(x, periodic) > margin
    }

    /// Characteristic length: radius for balls, smallest half-width over
    /// the non-periodic axes for boxes (the period when every axis wraps).
    pub fn scale(&self, periodic: &[Option<f64>]) -> f64 {
        match self {
            ChartDomain::Box { lo, hi } => {
                let mut s = f64::INFINITY;
                for i in 0..lo.len() {
                    let w = match periodic.get(i).copied().flatten() {
                        Some(p) => p,
                        None => 0.5 * (hi[i] - lo[i]),
                    };
                    s = s.min(w);
                }
                s
            }
            ChartDomain::Ball { radius, .. } => *radius,
            ChartDomain::Ellipsoid { form, radius, .. } => {
                let n = (form.len() as f64).sqrt() as usize;
                let largest = (0..n).map(|i| form[i * n + i]).fold(0.0_f64, f64::max);
                radius / largest.sqrt()
            }
        }
    }

    /// The image of the domain under `x -> factor * x`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ChartDomain::Box { lo, hi } => ChartDomain::Box {
                lo: lo.iter().map(|v| v * factor).collect(),
                hi: hi.iter().map(|v| v * factor).collect(),
            },
            ChartDomain::Ball { center, radius } => ChartDomain::Ball {
                center: center.iter().map(|v| v * factor).collect(),
                radius: radius * factor,
            },
            ChartDomain::Ellipsoid {
                center,
                form,
                radius,
            } => ChartDomain::Ellipsoid {
                center: center.iter().map(|v| v * factor).collect(),
                form: form.clone(),
                radius: radius * factor,
            },
        }
    }

    /// Uniform sample from the domain shrunk by `shrink` in (0, 1] about its
    /// centre. Periodic box axes are sampled over one full period.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, shrink: f64, periodic: &[Option<f64>]) -> Vec<f64> {
        match self {
            ChartDomain::Box { lo, hi } => (0..lo.len())
                .map(|i| {
                    let (a, b) = (lo[i], hi[i]);
                    if periodic.get(i).copied().flatten().is_some() {
                        rng.gen_range(a..b)
                    } else {
                        let c = 0.5 * (a + b);
                        let h = 0.5 * (b - a) * shrink;
                        rng.gen_range(c - h..c + h)
                    }
                })
                .collect(),
            ChartDomain::Ball { center, radius } => {
                let u = unit_ball_sample(rng, center.len());
                center
                    .iter()
                    .zip(&u)
                    .map(|(c, v)| c + radius * shrink * v)
                    .collect()
            }
            ChartDomain::Ellipsoid {
                center,
                form,
                radius,
            } => {
                let n = center.len();
                let u = unit_ball_sample(rng, n);
                // x = c + r * shrink * L^{-T} u with Q = L L^T.
                let l = linalg::cholesky(n, form).expect("ellipsoid form must be SPD");
                let mut y = vec![0.0; n];
                for i in (0..n).rev() {
                    let mut s = u[i];
                    for k in i + 1..n {
                        s -= l[k * n + i] * y[k];
                    }
                    y[i] = s / l[i * n + i];
                }
                center
                    .iter()
                    .zip(&y)
                    .map(|(c, v)| c + radius * shrink * v)
                    .collect()
            }
        }
    }
}

/// Uniform sample from the unit ball in `R^n`.
pub fn unit_ball_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let dir = unit_sphere_sample(rng, n);
    let r: f64 = rng.gen::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

/// Uniform sample from the unit sphere in `R^n` (Box-Muller Gaussians).
pub fn unit_sphere_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let norm = linalg::norm2(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
