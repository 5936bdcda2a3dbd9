use rayon::prelude::*;
use serde::Serialize;

use super::{pullback_with, ChartedMetric, Frame, GeometryError, PullbackOptions};

/// Five-point weights for derivatives of order 0..=3 on offsets -2..=2
/// (unit spacing).
const FD5: [[f64; 5]; 4] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0],
    [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
];

/// Number of sampling rings between the origin and the outer radius.
const RINGS: usize = 12;

/// Stencil spacing relative to the outer radius.
const STENCIL_FRACTION: f64 = 0.04;

/// Ring-wise maxima of `|d^mu (h_p - h_p(0))_ij|` over sampled points, by
/// derivative order `|mu|`.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationProfile {
    pub radii: Vec<f64>,
    /// `ring_max[ring][q]`: maximum over the ring's points, all `|mu| = q`
    /// and all components.
    pub ring_max: Vec<Vec<f64>>,
}

impl DeviationProfile {
    pub fn q_max(&self) -> usize {
        self.ring_max.first().map_or(0, |r| r.len() - 1)
    }

    /// Supremum of order-`q` derivatives over the ball of radius `rho`,
    /// using ring maxima and linear interpolation to the partial ring.
    pub fn sup_within(&self, q: usize, rho: f64) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.radii.len() {
            if self.radii[i] <= rho {
                best = best.max(self.ring_max[i][q]);
            } else {
                if i > 0 {
                    let (r0, r1) = (self.radii[i - 1], self.radii[i]);
                    let s = (rho - r0) / (r1 - r0);
                    let v = (1.0 - s) * self.ring_max[i - 1][q] + s * self.ring_max[i][q];
                    best = best.max(v);
                }
                break;
            }
        }
        best
    }

    /// Largest sampled radius.
    pub fn outer_radius(&self) -> f64 {
        self.radii.last().copied().unwrap_or(0.0)
    }
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for a in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[a] = s;
            dirs.push(d);
        }
    }
    let inv = 1.0 / (n as f64).sqrt();
    for mask in 0..(1usize << n) {
        dirs.push(
            (0..n)
                .map(|a| if mask & (1 << a) != 0 { -inv } else { inv })
                .collect(),
        );
    }
    dirs
}

fn multi_indices(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n - 1 {
            if left <= 3 {
                let mut v = cur.clone();
                v.push(left);
                out.push(v);
            }
            return;
        }
        for k in 0..=left.min(3) {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, q, &mut Vec::new(), &mut out);
    out
}

/// Derivative maxima of `hp - hp(0)` on rings of radius up to `r_max`.
///
/// `hp` must be defined on the ball of radius `r_max (1 + 2 sqrt(n) *
/// 0.04) ` about the origin.
pub fn deviation_profile(hp: &ChartedMetric, r_max: f64, q_max: usize) -> Result<DeviationProfile, GeometryError> {
    if q_max > 3 {
        return Err(GeometryError::DerivativeOrderTooHigh(q_max));
    }
    let n = hp.dim();
    let nn = n * n;
    let mut h0 = vec![0.0; nn];
    hp.metric_raw(&vec![0.0; n], &mut h0);
    let step = STENCIL_FRACTION * r_max;
    let radii: Vec<f64> = (0..=RINGS).map(|i| r_max * i as f64 / RINGS as f64).collect();
    let dirs = directions(n);
    let mut points: Vec<(usize, Vec<f64>)> = vec![(0, vec![0.0; n])];
    for (ri, &r) in radii.iter().enumerate().skip(1) {
        for d in &dirs {
            points.push((ri, d.iter().map(|c| c * r).collect()));
        }
    }
    let orders: Vec<Vec<Vec<usize>>> = (0..=q_max).map(|q| multi_indices(n, q)).collect();
    let stencil = 5usize.pow(n as u32);
    let per_point: Vec<(usize, Vec<f64>)> = points
        .into_par_iter()
        .map(|(ri, x)| {
            let mut vals = vec![0.0; stencil * nn];
            let mut y = vec![0.0; n];
            for s in 0..stencil {
                let mut rem = s;
                for a in 0..n {
                    y[a] = x[a] + step * ((rem % 5) as f64 - 2.0);
                    rem /= 5;
                }
                hp.metric_raw(&y, &mut vals[s * nn..(s + 1) * nn]);
                for c in 0..nn {
                    vals[s * nn + c] -= h0[c];
                }
            }
            let mut maxima = vec![0.0_f64; q_max + 1];
            for (q, mus) in orders.iter().enumerate() {
                let scale = step.powi(q as i32);
                for mu in mus {
                    let mut acc = vec![0.0; nn];
                    for s in 0..stencil {
                        let mut rem = s;
                        let mut w = 1.0;
                        for &ma in mu.iter() {
                            w *= FD5[ma][rem % 5];
                            rem /= 5;
                        }
                        if w != 0.0 {
                            for c in 0..nn {
                                acc[c] += w * vals[s * nn + c];
                            }
                        }
                    }
                    for v in acc {
                        maxima[q] = maxima[q].max((v / scale).abs());
                    }
                }
            }
            (ri, maxima)
        })
        .collect();
    let mut ring_max = vec![vec![0.0_f64; q_max + 1]; radii.len()];
    for (ri, m) in per_point {
        for q in 0..=q_max {
            if !m[q].is_finite() {
                ring_max[ri][q] = f64::INFINITY;
            } else {
                ring_max[ri][q] = ring_max[ri][q].max(m[q]);
            }
        }
    }
    Ok(DeviationProfile { radii, ring_max })
}

/// Radius of the pullback ball needed to profile up to `r_max`.
pub(crate) fn profile_reach(n: usize, r_max: f64) -> f64 {
    r_max * (1.0 + 2.0 * (n as f64).sqrt() * STENCIL_FRACTION * 1.01) + 1e-9
}

/// Per-basepoint profile in a `g(p)`-orthonormal frame.
pub(crate) fn orthonormal_profile(
    m: &ChartedMetric,
    p: &[f64],
    r_max: f64,
    q_max: usize,
) -> Result<DeviationProfile, GeometryError> {
    let opts = PullbackOptions {
        frame: Frame::Orthonormal,
        ..PullbackOptions::default()
    };
    let hp = pullback_with(m, p, profile_reach(m.dim(), r_max), &opts)?;
    deviation_profile(&hp, r_max, q_max)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiBoundedReport {
    pub r0: f64,
    pub q_max: usize,
    /// `a_q[q]`: sup over samples, `|mu| <= q`, components and the ball.
    pub a_q: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    /// Per-sample running maxima, aligned with `samples`.
    pub per_sample: Vec<Vec<f64>>,
    pub immersion_failures: Vec<Vec<f64>>,
}

impl QuasiBoundedReport {
    /// Largest relative spread of `A_q` across samples (for homogeneous
    /// spaces this should be small).
    pub fn relative_spread(&self, q: usize) -> f64 {
        let vals: Vec<f64> = self.per_sample.iter().map(|r| r[q]).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0_f64, f64::max);
        if hi == 0.0 {
            0.0
        } else {
            (hi - lo) / hi
        }
    }
}

/// Empirical quasi-bounded-geometry constants `A_q`, `q <= q_max <= 3`.
///
/// Each `h_p` is written in a `g(p)`-orthonormal frame so the ball
/// `B_{h(p)}(0, r0)` is the Euclidean ball and tensors at different `p` are
/// comparable.
pub fn quasi_bounded_check(
    m: &ChartedMetric,
    p_samples: &[Vec<f64>],
    r0: f64,
    q_max: usize,
) -> Result<QuasiBoundedReport, GeometryError> {
    if q_max > 3 {
        return Err(GeometryError::DerivativeOrderTooHigh(q_max));
    }
    if !(r0 > 0.0) {
        return Err(GeometryError::InvalidRadius(r0));
    }
    let mut samples = Vec::new();
    let mut per_sample = Vec::new();
    let mut failures = Vec::new();
    let mut last_err = None;
    for p in p_samples {
        match orthonormal_profile(m, p, r0, q_max) {
            Ok(profile) => {
                let mut run = 0.0_f64;
                let row: Vec<f64> = (0..=q_max)
                    .map(|q| {
                        run = run.max(profile.sup_within(q, r0));
                        run
                    })
                    .collect();
                samples.push(p.clone());
                per_sample.push(row);
            }
            Err(e @ GeometryError::NotImmersion { .. }) => {
                failures.push(p.clone());
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() {
        return Err(last_err.unwrap_or(GeometryError::InvalidRadius(r0)));
    }
    let a_q = (0..=q_max)
        .map(|q| per_sample.iter().map(|r| r[q]).fold(0.0_f64, f64::max))
        .collect();
    Ok(QuasiBoundedReport {
        r0,
        q_max,
        a_q,
        samples,
        per_sample,
        immersion_failures: failures,
    })
}
