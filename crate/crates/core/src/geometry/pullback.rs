use nalgebra::{DMatrix, SymmetricEigen};

use super::{exp_jacobian, ChartDomain, ChartedMetric, GeometryError, MetricField};
use std::sync::Arc;

/// Relative smallest singular value of `d exp_p` below which the exponential
/// map is declared not to be an immersion.
pub const IMMERSION_THRESHOLD: f64 = 1e-6;

/// Frame in which tangent vectors at `p` are written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// Chart coordinate basis `d_1, ..., d_n` at `p`: `h_p(0) = h(p)`.
    Coordinate,
    /// A `g(p)`-orthonormal basis: `h_p(0) = I`. Makes tensors at different
    /// base points directly comparable.
    Orthonormal,
}

#[derive(Clone, Debug)]
pub struct PullbackOptions {
    pub frame: Frame,
    /// RK4 steps per exponential-map evaluation.
    pub steps: usize,
    /// Sampled points per radius ring for the immersion check.
    pub immersion_directions: usize,
}

impl Default for PullbackOptions {
    fn default() -> Self {
        Self {
            frame: Frame::Coordinate,
            steps: 64,
            immersion_directions: 8,
        }
    }
}

/// `h_p(x) = (exp_p o E)^* h` at `x`, for a fixed frame `E` at `p`.
#[derive(Clone, Debug)]
pub struct PullbackField {
    base: ChartedMetric,
    p: Vec<f64>,
    frame: Vec<f64>,
    steps: usize,
}

impl PullbackField {
    fn tangent(&self, x: &[f64]) -> Vec<f64> {
        let n = self.p.len();
        (0..n)
            .map(|i| (0..n).map(|a| self.frame[i * n + a] * x[a]).sum())
            .collect()
    }

    /// `exp_p(E x)` in lifted base-chart coordinates.
    pub fn exp(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        super::geodesic_exp_lifted(&self.base, &self.p, &self.tangent(x), self.steps)
    }

    /// Differential `A = d exp_p(Ex) E`, row-major, with the image point.
    pub fn differential(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        let n = self.p.len();
        let (pt, jac) = exp_jacobian(&self.base, &self.p, &self.tangent(x), self.steps)?;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for b in 0..n {
                a[i * n + b] = (0..n).map(|k| jac[i * n + k] * self.frame[k * n + b]).sum();
            }
        }
        Ok((pt, a))
    }

    pub fn base_point(&self) -> &[f64] {
        &self.p
    }

    /// Frame columns at `p` (row-major `[i * n + a]`).
    pub fn frame(&self) -> &[f64] {
        &self.frame
    }

    pub fn base_metric(&self) -> &ChartedMetric {
        &self.base
    }
}

impl MetricField for PullbackField {
    fn dim(&self) -> usize {
        self.p.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.p.len();
        let Ok((pt, a)) = self.differential(x) else {
            out[..n * n].fill(f64::NAN);
            return;
        };
        let mut g = vec![0.0; n * n];
        self.base.metric_raw(&pt, &mut g);
        for b in 0..n {
            for c in b..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += a[i * n + b] * g[i * n + j] * a[j * n + c];
                    }
                }
                out[b * n + c] = s;
                out[c * n + b] = s;
            }
        }
    }
}

/// Pullback `h_p = exp_p^* h` in the coordinate frame, on the ball of
/// `h(p)`-radius `radius` in `T_p M`. Checks that `exp_p` is an immersion at
/// sampled points of the ball.
pub fn pullback_exp_metric(m: &ChartedMetric, p: &[f64], radius: f64) -> Result<ChartedMetric, GeometryError> {
    pullback_with(m, p, radius, &PullbackOptions::default())
}

pub fn pullback_with(
    m: &ChartedMetric,
    p: &[f64],
    radius: f64,
    opts: &PullbackOptions,
) -> Result<ChartedMetric, GeometryError> {
    m.check_point(p)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(GeometryError::InvalidRadius(radius));
    }
    let n = m.dim();
    let mut gp = vec![0.0; n * n];
    m.metric_raw(p, &mut gp);
    let (frame, domain) = match opts.frame {
        Frame::Coordinate => {
            let mut e = vec![0.0; n * n];
            for i in 0..n {
                e[i * n + i] = 1.0;
            }
            let domain = ChartDomain::Ellipsoid {
                center: vec![0.0; n],
                form: gp.clone(),
                radius,
            };
            (e, domain)
        }
        Frame::Orthonormal => (m.orthonormal_frame(p)?, ChartDomain::ball(vec![0.0; n], radius)),
    };
    let field = PullbackField {
        base: m.clone(),
        p: p.to_vec(),
        frame,
        steps: opts.steps,
    };
    check_immersion(&field, &gp, radius, opts)?;
    Ok(ChartedMetric::new(format!("{}|exp_p", m.name()), domain, Arc::new(field)))
}

fn check_immersion(
    field: &PullbackField,
    gp: &[f64],
    radius: f64,
    opts: &PullbackOptions,
) -> Result<(), GeometryError> {
    let n = field.p.len();
    // Unit directions in the h(p)-orthonormal frame, mapped back to the
    // chosen frame coordinates.
    let on = field.base.orthonormal_frame(&field.p)?;
    let to_frame = |y: &[f64]| -> Vec<f64> {
        // tangent t = O y; frame coordinates solve E x = t.
        let t: Vec<f64> = (0..n).map(|i| (0..n).map(|a| on[i * n + a] * y[a]).sum()).collect();
        let mut inv = vec![0.0; n * n];
        let mut work = vec![0.0; n * n];
        crate::linalg::invert_into(n, &field.frame, &mut inv, &mut work);
        (0..n).map(|i| (0..n).map(|j| inv[i * n + j] * t[j]).sum()).collect()
    };
    let mut points = vec![vec![0.0; n]];
    let dirs = opts.immersion_directions.max(2);
    for &frac in &[0.5, 0.95] {
        for d in 0..dirs {
            let theta = std::f64::consts::TAU * d as f64 / dirs as f64;
            let mut y = vec![0.0; n];
            y[0] = frac * radius * theta.cos();
            y[1] = frac * radius * theta.sin();
            // Tilt into higher axes so every coordinate direction is probed.
            for (k, c) in y.iter_mut().enumerate().skip(2) {
                *c = frac * radius * 0.5 * (theta * (k as f64)).sin();
            }
            let norm = crate::linalg::norm2(&y);
            if norm > 0.0 {
                y.iter_mut().for_each(|c| *c *= frac * radius / norm);
            }
            points.push(to_frame(&y));
        }
    }
    let gmat = DMatrix::from_row_slice(n, n, gp);
    for x in points {
        let (_, a) = field.differential(&x)?;
        let amat = DMatrix::from_row_slice(n, n, &a);
        // Singular values of d exp_p measured in h(p) on both sides.
        let ata = amat.transpose() * &gmat * &amat;
        let eig = SymmetricEigen::new(ata);
        let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let largest = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let sigma = smallest.max(0.0).sqrt();
        if !(sigma > IMMERSION_THRESHOLD * largest.sqrt()) {
            return Err(GeometryError::NotImmersion { point: x, sigma });
        }
    }
    Ok(())
}
