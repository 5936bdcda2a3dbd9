use super::{ChartedMetric, CurvatureWorkspace, GeometryError};
use crate::linalg;

/// Default number of fixed RK4 steps on `[0, 1]`.
pub const DEFAULT_STEPS: usize = 256;

/// Maximum consecutive step halvings before giving up on a step.
const MAX_HALVINGS: usize = 20;

/// Relative step for differentiating the exponential map.
const EXP_FD_STEP: f64 = 1e-5;

/// Positions and velocities at each accepted step, in lifted coordinates
/// (periodic axes are not wrapped).
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

struct Integrator<'a> {
    m: &'a ChartedMetric,
    n: usize,
    /// Integrate the variational equations for `d exp_p` alongside.
    variational: bool,
    eta: f64,
    ws: CurvatureWorkspace,
    gamma: Vec<f64>,
    acc: Vec<f64>,
    acc_p: Vec<f64>,
    acc_m: Vec<f64>,
    xs: Vec<f64>,
    stages: [Vec<f64>; 5],
}

impl<'a> Integrator<'a> {
    fn new(m: &'a ChartedMetric, variational: bool) -> Self {
        let n = m.dim();
        Self {
            m,
            n,
            variational,
            eta: EXP_FD_STEP * m.domain().scale(m.periodicity()).min(1.0),
            ws: CurvatureWorkspace::new(n),
            gamma: vec![0.0; n * n * n],
            acc: vec![0.0; n],
            acc_p: vec![0.0; n],
            acc_m: vec![0.0; n],
            xs: vec![0.0; n],
            stages: Default::default(),
        }
    }

    fn state_len(&self) -> usize {
        if self.variational {
            2 * self.n + 2 * self.n * self.n
        } else {
            2 * self.n
        }
    }

    /// Geodesic acceleration `-Gamma^k_ij v^i v^j` into `out`, leaving the
    /// Christoffel symbols at `x` in `self.gamma`.
    fn accel(&mut self, x: &[f64], v: &[f64], which: u8) -> bool {
        if !self.m.contains(x) || !self.ws.christoffel_into(self.m, x, &mut self.gamma) {
            return false;
        }
        let n = self.n;
        let out = match which {
            0 => &mut self.acc,
            1 => &mut self.acc_p,
            _ => &mut self.acc_m,
        };
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.gamma[k * n * n + i * n + j] * v[i] * v[j];
                }
            }
            out[k] = -s;
        }
        true
    }

    /// Right-hand side of the first-order system. Layout of `s`:
    /// `[x, v, X, V]` with `X[a * n + i]` the i-th component of column `a`.
    fn rhs(&mut self, s: &[f64], out: &mut [f64]) -> bool {
        let n = self.n;
        let (x, rest) = s.split_at(n);
        let (v, rest) = rest.split_at(n);
        if self.variational {
            let xcol = &rest[..n * n];
            // Directional derivatives of the acceleration field first, since
            // they clobber the Christoffel buffer.
            for a in 0..n {
                let col = &xcol[a * n..(a + 1) * n];
                let norm = linalg::norm2(col);
                let base = 2 * n + n * n + a * n;
                if norm == 0.0 {
                    out[base..base + n].fill(0.0);
                    continue;
                }
                let eta = self.eta / norm;
                let mut xs = std::mem::take(&mut self.xs);
                for i in 0..n {
                    xs[i] = x[i] + eta * col[i];
                }
                let ok = self.accel(&xs, v, 1);
                for i in 0..n {
                    xs[i] = x[i] - eta * col[i];
                }
                let ok = ok && self.accel(&xs, v, 2);
                self.xs = xs;
                if !ok {
                    return false;
                }
                for k in 0..n {
                    out[base + k] = (self.acc_p[k] - self.acc_m[k]) / (2.0 * eta);
                }
            }
        }
        if !self.accel(x, v, 0) {
            return false;
        }
        out[..n].copy_from_slice(v);
        out[n..2 * n].copy_from_slice(&self.acc);
        if self.variational {
            let vcol = &rest[n * n..];
            out[2 * n..2 * n + n * n].copy_from_slice(vcol);
            for a in 0..n {
                let vc = &vcol[a * n..(a + 1) * n];
                let base = 2 * n + n * n + a * n;
                for k in 0..n {
                    let mut s2 = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            s2 += self.gamma[k * n * n + i * n + j] * v[i] * vc[j];
                        }
                    }
                    out[base + k] -= 2.0 * s2;
                }
            }
        }
        true
    }

    /// One RK4 step of size `dt` from `s` into `out`; `false` if any stage
    /// leaves the chart.
    fn step(&mut self, s: &[f64], dt: f64, out: &mut Vec<f64>) -> bool {
        let len = s.len();
        let [mut k1, mut k2, mut k3, mut k4, mut tmp] = std::mem::take(&mut self.stages);
        for b in [&mut k1, &mut k2, &mut k3, &mut k4, &mut tmp] {
            b.resize(len, 0.0);
        }
        let ok = (|| {
            if !self.rhs(s, &mut k1) {
                return false;
            }
            for i in 0..len {
                tmp[i] = s[i] + 0.5 * dt * k1[i];
            }
            if !self.rhs(&tmp, &mut k2) {
                return false;
            }
            for i in 0..len {
                tmp[i] = s[i] + 0.5 * dt * k2[i];
            }
            if !self.rhs(&tmp, &mut k3) {
                return false;
            }
            for i in 0..len {
                tmp[i] = s[i] + dt * k3[i];
            }
            if !self.rhs(&tmp, &mut k4) {
                return false;
            }
            out.resize(len, 0.0);
            for i in 0..len {
                out[i] = s[i] + dt * ((k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
            }
            self.m.contains(&out[..self.n]) && out.iter().all(|c| c.is_finite())
        })();
        self.stages = [k1, k2, k3, k4, tmp];
        ok
    }

    /// Integrates on `[0, 1]` and returns the final state.
    fn run(
        &mut self,
        p: &[f64],
        v: &[f64],
        steps: usize,
        mut record: Option<&mut Trajectory>,
    ) -> Result<Vec<f64>, GeometryError> {
        let n = self.n;
        let steps = steps.max(1);
        let dt0 = 1.0 / steps as f64;
        let mut s = vec![0.0; self.state_len()];
        s[..n].copy_from_slice(p);
        s[n..2 * n].copy_from_slice(v);
        if self.variational {
            for a in 0..n {
                s[2 * n + n * n + a * n + a] = 1.0;
            }
        }
        let mut next = Vec::with_capacity(s.len());
        let mut t = 0.0;
        let mut substeps = 0;
        if let Some(r) = record.as_deref_mut() {
            r.t.push(0.0);
            r.x.push(s[..n].to_vec());
            r.v.push(s[n..2 * n].to_vec());
        }
        // Nominal grid points are hit exactly so the map v -> exp(v) is a
        // smooth function whenever no halving occurs.
        let mut k = 0;
        while k < steps {
            let target = (k + 1) as f64 * dt0;
            let mut dt = target - t;
            let mut halvings = 0;
            loop {
                if self.step(&s, dt, &mut next) {
                    std::mem::swap(&mut s, &mut next);
                    t += dt;
                    substeps += 1;
                    break;
                }
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(GeometryError::LeftChart { t });
                }
                dt *= 0.5;
            }
            if substeps > 64 * steps {
                return Err(GeometryError::ReducedStepExhausted { substeps });
            }
            if (t - target).abs() <= 1e-15 {
                t = target;
                k += 1;
                if let Some(r) = record.as_deref_mut() {
                    r.t.push(t);
                    r.x.push(s[..n].to_vec());
                    r.v.push(s[n..2 * n].to_vec());
                }
            }
        }
        Ok(s)
    }
}

fn check_vector(m: &ChartedMetric, v: &[f64]) -> Result<(), GeometryError> {
    if v.len() != m.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: m.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Endpoint `gamma(1)` of the geodesic with `gamma(0) = p`, `gamma'(0) = v`,
/// integrated by fixed-step RK4. Periodic axes are wrapped.
pub fn geodesic_exp(m: &ChartedMetric, p: &[f64], v: &[f64], steps: usize) -> Result<Vec<f64>, GeometryError> {
    Ok(m.wrap(&geodesic_exp_lifted(m, p, v, steps)?))
}

/// As [`geodesic_exp`] but in lifted (unwrapped) coordinates.
pub fn geodesic_exp_lifted(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    steps: usize,
) -> Result<Vec<f64>, GeometryError> {
    m.check_point(p)?;
    check_vector(m, v)?;
    let s = Integrator::new(m, false).run(p, v, steps, None)?;
    Ok(s[..m.dim()].to_vec())
}

/// Full trajectory on `[0, 1]`, one record per nominal step.
pub fn geodesic_trajectory(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    steps: usize,
) -> Result<Trajectory, GeometryError> {
    m.check_point(p)?;
    check_vector(m, v)?;
    let mut tr = Trajectory::default();
    Integrator::new(m, false).run(p, v, steps, Some(&mut tr))?;
    Ok(tr)
}

/// Lifted endpoint of `exp_p(v)` and its Jacobian `J[i * n + a] =
/// d exp_p(v)^i / d v^a`, from the variational (Jacobi) equations integrated
/// alongside the geodesic. The curvature term uses a central difference of
/// the acceleration field, so flat charts give `J = I` to roundoff.
pub fn exp_jacobian(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    m.check_point(p)?;
    check_vector(m, v)?;
    let n = m.dim();
    let s = Integrator::new(m, true).run(p, v, steps, None)?;
    let mut jac = vec![0.0; n * n];
    for a in 0..n {
        for i in 0..n {
            jac[i * n + a] = s[2 * n + a * n + i];
        }
    }
    Ok((s[..n].to_vec(), jac))
}

/// Inverse exponential map by Newton shooting from the chart displacement.
pub fn geodesic_log(m: &ChartedMetric, p: &[f64], q: &[f64], steps: usize) -> Result<Vec<f64>, GeometryError> {
    m.check_point(p)?;
    m.check_point(q)?;
    let n = m.dim();
    let target: Vec<f64> = p
        .iter()
        .zip(m.displacement(p, q))
        .map(|(a, d)| a + d)
        .collect();
    let tol = 1e-12 * m.domain().scale(m.periodicity()).min(1.0).max(1e-300);
    let mut v = m.displacement(p, q);
    let mut inv = vec![0.0; n * n];
    let mut work = vec![0.0; n * n];
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let (x, jac) = exp_jacobian(m, p, &v, steps)?;
        let r: Vec<f64> = (0..n).map(|i| target[i] - x[i]).collect();
        residual = linalg::norm2(&r);
        if residual <= tol {
            return Ok(v);
        }
        if !linalg::invert_into(n, &jac, &mut inv, &mut work) {
            break;
        }
        let delta: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| inv[i * n + j] * r[j]).sum())
            .collect();
        // Damp until the shot stays in the chart and the residual drops.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = (0..n).map(|i| v[i] + lambda * delta[i]).collect();
            if let Ok(xt) = geodesic_exp_lifted(m, p, &trial, steps) {
                let rt = linalg::norm2(&(0..n).map(|i| target[i] - xt[i]).collect::<Vec<_>>());
                if rt < residual {
                    v = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual <= 1e3 * tol {
        Ok(v)
    } else {
        Err(GeometryError::ShootingFailed { residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::models;

    #[test]
    fn euclidean_geodesics_are_straight() {
        let m = models::euclidean(3, 10.0);
        let p = [0.5, -1.0, 2.0];
        let v = [1.5, 0.25, -3.0];
        let x = geodesic_exp(&m, &p, &v, DEFAULT_STEPS).unwrap();
        for i in 0..3 {
            assert!((x[i] - p[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_radial_geodesic() {
        let m = models::poincare_disc();
        for a in [0.1, 0.5, 1.0, 2.0] {
            let x = geodesic_exp(&m, &[0.0, 0.0], &[a, 0.0], DEFAULT_STEPS).unwrap();
            assert!((x[0] - f64::tanh(a)).abs() < 1e-6, "a = {a}: {x:?}");
            assert!(x[1].abs() < 1e-14);
        }
    }

    #[test]
    fn torus_endpoint_is_wrapped() {
        let m = models::standard_torus(2);
        let p = [1.0, 2.0];
        let v = [9.0, -7.5];
        let x = geodesic_exp(&m, &p, &v, DEFAULT_STEPS).unwrap();
        let tau = std::f64::consts::TAU;
        assert!((x[0] - (p[0] + v[0]).rem_euclid(tau)).abs() < 1e-12);
        assert!((x[1] - (p[1] + v[1]).rem_euclid(tau)).abs() < 1e-12);
    }

    #[test]
    fn log_inverts_exp() {
        let m = models::hyperbolic_ball(2);
        let p = [0.2, -0.1];
        let v = [0.7, 0.4];
        let q = geodesic_exp(&m, &p, &v, DEFAULT_STEPS).unwrap();
        let w = geodesic_log(&m, &p, &q, DEFAULT_STEPS).unwrap();
        assert!((w[0] - v[0]).abs() < 1e-8 && (w[1] - v[1]).abs() < 1e-8, "{w:?}");
    }

    #[test]
    fn leaving_the_chart_is_reported() {
        let m = models::euclidean(2, 1.0);
        let err = geodesic_exp(&m, &[0.0, 0.0], &[3.0, 0.0], 16).unwrap_err();
        assert!(matches!(err, GeometryError::LeftChart { .. }), "{err}");
    }
}
