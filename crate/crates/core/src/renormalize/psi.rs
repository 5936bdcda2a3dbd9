use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::RenormError;
use crate::geometry::{ChartDomain, ChartedMetric};

fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `C^inf` step from 0 (at `x <= 0`) to 1 (at `x >= 1`).
fn smooth_step(x: f64) -> f64 {
    let a = bump(x);
    let b = bump(1.0 - x);
    a / (a + b)
}

/// Smooth nondecreasing cutoff: `psi(t) = t` on `[0, 1/2]`, `psi(t) = 1` on
/// `[3/4, inf)`, and `t + (1 - t) S(4t - 2)` in between with `S` a `C^inf`
/// step (nondecreasing because `1 - t >= 1/4` there).
pub fn psi(t: f64) -> f64 {
    if t <= 0.5 {
        t
    } else if t >= 0.75 {
        1.0
    } else {
        t + (1.0 - t) * smooth_step(4.0 * t - 2.0)
    }
}

/// `Psi_q(x) = psi(|x - x(q)|^2) exp(A psi(|x - x(q)|))`, lengths measured in
/// units of `scale`; equal to `exp(A)` wherever `|x - x(q)|^2 >= 3/4`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiCap {
    pub center: Vec<f64>,
    pub a: f64,
    pub scale: f64,
    pub periodicity: Vec<Option<f64>>,
}

impl PsiCap {
    /// Chart distance `|x - x(q)| / scale` (minimal image on periodic axes).
    pub fn distance(&self, x: &[f64]) -> f64 {
        distance(&self.periodicity, &self.center, x) / self.scale
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let s = self.distance(x);
        psi(s * s) * (self.a * psi(s)).exp()
    }
}

pub(crate) fn distance(periodicity: &[Option<f64>], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let d = y - x;
            let d = match periodicity.get(i).copied().flatten() {
                Some(p) => d - p * (d / p).round(),
                None => d,
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Whether the closed ball of `radius` about `c` lies in the open domain
/// (periodic axes never constrain).
fn ball_fits(m: &ChartedMetric, c: &[f64], radius: f64) -> bool {
    let per = m.periodicity();
    let periodic = |i: usize| per.get(i).copied().flatten().is_some();
    match m.domain() {
        ChartDomain::Box { lo, hi } => (0..lo.len()).all(|i| periodic(i) || (lo[i] < c[i] - radius && c[i] + radius < hi[i])),
        ChartDomain::Ball { center, radius: r } => {
            let d: f64 = (0..c.len())
                .filter(|&i| !periodic(i))
                .map(|i| (c[i] - center[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            d + radius < *r
        }
        ChartDomain::Ellipsoid { center, form, radius: r } => {
            let n = c.len();
            let d: Vec<f64> = c.iter().zip(center).map(|(a, b)| a - b).collect();
            let q = crate::linalg::bilinear(n, form, &d, &d).max(0.0).sqrt();
            let lmax = SymmetricEigen::new(DMatrix::from_row_slice(n, n, form))
                .eigenvalues
                .iter()
                .fold(0.0_f64, |a, &b| a.max(b));
            q + radius * lmax.sqrt() < *r
        }
    }
}

/// The capped function `Psi_q` for the chart point `q`. The chart must
/// contain the closed ball of radius 3 about `q`.
pub fn psi_cap(m: &ChartedMetric, q: &[f64], a: f64) -> Result<PsiCap, RenormError> {
    m.check_point(q)?;
    if !(a >= 0.0) {
        return Err(RenormError::InvalidConfig(format!("A must be nonnegative, got {a}")));
    }
    if !ball_fits(m, q, 3.0) {
        return Err(RenormError::ChartTooSmall {
            center: q.to_vec(),
            radius: 3.0,
        });
    }
    Ok(PsiCap {
        center: q.to_vec(),
        a,
        scale: 1.0,
        periodicity: m.periodicity().to_vec(),
    })
}
