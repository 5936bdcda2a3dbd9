use serde::{Deserialize, Serialize};

use super::PinchedError;
use crate::disc::{relax_centered, DiscGrid, DiscMap, RelaxOptions, SolveReport};
use crate::geometry::{pullback_with, rescaled_metric, ChartedMetric, Frame, PullbackOptions, TabulatedMetric};
use crate::linalg;
use crate::tolerances::{TAU_ALPHA, TAU_C, TAU_H};

/// Radius (in rescaled coordinates) on which `h^t_p` is tabulated; the
/// Claim needs the closed ball of radius 2.
const CLAIM_RADIUS: f64 = 2.1;

/// Lattice spacing of the tabulation, in rescaled coordinates.
const TAB_SPACING: f64 = 1.0 / 12.0;

/// The rescaled normal-coordinate metric `h^t_p(x) = h_p(t x)` on
/// `B(0, 2.1)`, with `h_p` the exponential pullback in a `g(p)`-orthonormal
/// frame. The pullback is tabulated first so relaxation does not integrate
/// geodesics per metric evaluation.
pub fn rescaled_normal_metric(m: &ChartedMetric, p: &[f64], t: f64) -> Result<ChartedMetric, PinchedError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(PinchedError::InvalidConfig(format!("scale must be positive, got {t}")));
    }
    let n = m.dim();
    let reach = t * (CLAIM_RADIUS + 2.0 * (n as f64).sqrt() * TAB_SPACING * 1.01);
    let opts = PullbackOptions {
        frame: Frame::Orthonormal,
        ..PullbackOptions::default()
    };
    let hp = pullback_with(m, p, reach, &opts)?;
    let tab = TabulatedMetric::sample(&hp, t * CLAIM_RADIUS, t * TAB_SPACING)?;
    Ok(rescaled_metric(&tab, t)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClaimOptions {
    pub resolution: usize,
    pub tau_h: f64,
    pub tau_c: f64,
    pub tau_alpha: f64,
    pub max_iter: usize,
}

impl Default for ClaimOptions {
    fn default() -> Self {
        Self {
            resolution: 33,
            tau_h: TAU_H,
            tau_c: TAU_C,
            tau_alpha: TAU_ALPHA,
            max_iter: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClaimDisc {
    /// Disc in the rescaled coordinates, `u(0) = 0`.
    pub map: DiscMap,
    pub report: SolveReport,
    /// `h(p)(du(0) e1, v / |v|)`.
    pub alpha: f64,
    /// Size of the part of `du(0)` leaving the plane `span(v, w)`, relative
    /// to `|du(0) e1|`.
    pub plane_defect: f64,
    /// Largest `h(p)`-norm over the disc nodes.
    pub image_radius: f64,
}

/// Relaxes the flat disc `x v/|v| + y w/|w|` under `hp_t` (boundary fixed,
/// re-centred so `u(0) = 0`) and measures `alpha`. Fails with
/// `ClaimFailure` when `alpha < 1/2 - tau_alpha`.
pub fn claim_disc(hp_t: &ChartedMetric, v: &[f64], w: &[f64], opts: &ClaimOptions) -> Result<ClaimDisc, PinchedError> {
    let n = hp_t.dim();
    if v.len() != n || w.len() != n {
        return Err(PinchedError::InvalidConfig("v and w must match the chart dimension".into()));
    }
    let origin = vec![0.0; n];
    let mut h0 = vec![0.0; n * n];
    hp_t.metric_raw(&origin, &mut h0);
    let nv = linalg::bilinear(n, &h0, v, v).sqrt();
    let nw = linalg::bilinear(n, &h0, w, w).sqrt();
    if !(nv > 0.0 && nw > 0.0) {
        return Err(PinchedError::InvalidConfig("v and w must be nonzero".into()));
    }
    let inner = linalg::bilinear(n, &h0, v, w);
    if inner.abs() > 1e-10 * nv * nw {
        return Err(PinchedError::NotOrthogonal { inner });
    }
    let v_hat: Vec<f64> = v.iter().map(|c| c / nv).collect();
    let w_hat: Vec<f64> = w.iter().map(|c| c / nw).collect();
    let grid = DiscGrid::shared(opts.resolution)?;
    let seed = DiscMap::from_fn(grid.clone(), hp_t.clone(), |x, y| {
        (0..n).map(|k| x * v_hat[k] + y * w_hat[k]).collect()
    })?;
    let relax = RelaxOptions {
        tau_h: opts.tau_h,
        max_iter: opts.max_iter,
        ..RelaxOptions::default()
    };
    let (map, report) = relax_centered(&seed, &origin, &relax)?;
    report.ensure_converged()?;

    let (ux, uy) = map.differential_at_origin();
    let alpha = linalg::bilinear(n, &h0, &ux, &v_hat);
    let mut out_of_plane: f64 = 0.0;
    for d in [&ux, &uy] {
        let a = linalg::bilinear(n, &h0, d, &v_hat);
        let b = linalg::bilinear(n, &h0, d, &w_hat);
        let r: Vec<f64> = (0..n).map(|k| d[k] - a * v_hat[k] - b * w_hat[k]).collect();
        out_of_plane = out_of_plane.max(linalg::bilinear(n, &h0, &r, &r).max(0.0).sqrt());
    }
    let ux_norm = linalg::bilinear(n, &h0, &ux, &ux).sqrt();
    let image_radius = (0..grid.n_nodes())
        .map(|i| {
            let x = map.value(i);
            linalg::bilinear(n, &h0, x, x).sqrt()
        })
        .fold(0.0_f64, f64::max);
    let threshold = 0.5 - opts.tau_alpha;
    if !(alpha >= threshold) {
        return Err(PinchedError::ClaimFailure { alpha, threshold });
    }
    Ok(ClaimDisc {
        map,
        report,
        alpha,
        plane_defect: out_of_plane / ux_norm,
        image_radius,
    })
}
