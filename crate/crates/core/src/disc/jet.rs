use log::debug;

use super::relax::relax_with;
use super::{DiscError, DiscGrid, DiscMap, RelaxOptions, SolveReport};
use crate::geometry::{geodesic_exp_lifted, ChartedMetric};
use crate::tolerances::{tau_jet, TAU_C, TAU_H};

/// Geodesic steps used to build seeds.
const SEED_STEPS: usize = 32;
/// Maximum number of boundary re-centring passes.
const MAX_RECENTER: usize = 8;

#[derive(Clone, Debug)]
pub struct JetOptions {
    /// Grid resolution (odd).
    pub resolution: usize,
    pub tau_h: f64,
    pub tau_c: f64,
    pub max_iter: usize,
}

impl Default for JetOptions {
    fn default() -> Self {
        Self {
            resolution: 65,
            tau_h: TAU_H,
            tau_c: TAU_C,
            max_iter: 60,
        }
    }
}

/// A relaxed disc with `u(0) = p` tangent to a prescribed plane.
#[derive(Clone, Debug)]
pub struct JetDisc {
    pub map: DiscMap,
    pub report: SolveReport,
    /// `g(p)`-orthonormal basis of the plane, `v_hat` along the given `v`.
    pub v_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub radius: f64,
    /// `|du(0) e_1 - r v_hat|_g / r`.
    pub drift: f64,
    pub tau_jet: f64,
}

/// Gram-Schmidt of `(v, w)` in `g(p)`. Rejects near-colinear pairs.
pub fn orthonormalize_plane(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), DiscError> {
    let n = m.dim();
    if v.len() != n || w.len() != n {
        return Err(DiscError::DegenerateInput(format!(
            "plane vectors must have {n} components"
        )));
    }
    let nv = m.norm(p, v);
    let nw = m.norm(p, w);
    if !(nv > 0.0) || !(nw > 0.0) {
        return Err(DiscError::DegenerateInput("zero vector spanning the plane".into()));
    }
    let v_hat: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let c = m.inner(p, w, &v_hat);
    let perp: Vec<f64> = w.iter().zip(&v_hat).map(|(a, b)| a - c * b).collect();
    let np = m.norm(p, &perp);
    if np <= 1e-10 * nw {
        return Err(DiscError::DegenerateInput("colinear plane vectors".into()));
    }
    Ok((v_hat, perp.into_iter().map(|x| x / np).collect()))
}

/// The normal-coordinate disc `z -> exp_p(r (x v_hat + y w_hat))` on the
/// grid, in lifted coordinates.
pub fn normal_disc(
    m: &ChartedMetric,
    p: &[f64],
    v_hat: &[f64],
    w_hat: &[f64],
    r: f64,
    grid: std::sync::Arc<DiscGrid>,
) -> Result<DiscMap, DiscError> {
    let n = m.dim();
    let mut values = Vec::with_capacity(grid.n_nodes() * n);
    let mut t = vec![0.0; n];
    for &[x, y] in grid.nodes() {
        for k in 0..n {
            t[k] = r * (x * v_hat[k] + y * w_hat[k]);
        }
        values.extend(geodesic_exp_lifted(m, p, &t, SEED_STEPS)?);
    }
    DiscMap::new(grid, m.clone(), values)
}

/// A conformal harmonic disc through `p` tangent to the plane spanned by
/// `(v, w)` with `du(0) e_1 ~ r v_hat`.
///
/// Seeds with [`normal_disc`], relaxes with the seed's boundary, then
/// translates the boundary data until the relaxed centre returns to `p`
/// and sets `u(0) = p`. Fails with `JetDrift` when the first-order jet
/// drifts beyond `max(tau_c, r^2)`.
pub fn jet_disc(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    w: &[f64],
    r: f64,
    opts: &JetOptions,
) -> Result<JetDisc, DiscError> {
    let disc = jet_disc_unchecked(m, p, v, w, r, opts)?;
    if disc.drift > disc.tau_jet {
        return Err(DiscError::JetDrift {
            drift: disc.drift,
            tau_jet: disc.tau_jet,
        });
    }
    Ok(disc)
}

/// [`jet_disc`] without the drift check (the drift is still reported);
/// callers that read the realised jet off the solved disc use this.
pub fn jet_disc_unchecked(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    w: &[f64],
    r: f64,
    opts: &JetOptions,
) -> Result<JetDisc, DiscError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(DiscError::DegenerateInput(format!("disc radius must be positive, got {r}")));
    }
    m.check_point(p)?;
    let (v_hat, w_hat) = orthonormalize_plane(m, p, v, w)?;
    let grid = DiscGrid::shared(opts.resolution)?;
    let seed = normal_disc(m, p, &v_hat, &w_hat, r, grid.clone())?;
    let relax = RelaxOptions {
        tau_h: opts.tau_h,
        max_iter: opts.max_iter,
        ..RelaxOptions::default()
    };
    let (map, report) = relax_centered(&seed, p, &relax)?;

    let (ux, _) = map.differential_at_origin();
    let diff: Vec<f64> = ux.iter().zip(&v_hat).map(|(a, b)| a - r * b).collect();
    let drift = m.norm(p, &diff) / r;
    Ok(JetDisc {
        map,
        report,
        v_hat,
        w_hat,
        radius: r,
        drift,
        tau_jet: tau_jet(opts.tau_c, r),
    })
}

/// Relaxes `seed` with its own boundary data, then translates the boundary
/// (in chart coordinates) until the relaxed centre returns to `p`, and sets
/// `u(0) = p` exactly. The conformality defect is recomputed afterwards.
pub fn relax_centered(seed: &DiscMap, p: &[f64], opts: &RelaxOptions) -> Result<(DiscMap, SolveReport), DiscError> {
    let m = seed.target();
    let grid = seed.grid().clone();
    let n = m.dim();
    let (mut map, mut report) = relax_with(seed, None, opts)?;
    let scale = m.domain().scale(m.periodicity()).min(1.0);
    let origin = grid.origin();
    let mb = grid.n_interior() * n;
    for pass in 0..MAX_RECENTER {
        let offset: Vec<f64> = map.center().iter().zip(p).map(|(c, q)| c - q).collect();
        let off = crate::linalg::sup_norm(&offset);
        if off <= 1e-13 * scale {
            break;
        }
        debug!("re-centring pass {pass}: offset {off:.3e}");
        let mut values = map.values().to_vec();
        for node in 0..grid.n_nodes() {
            for k in 0..n {
                values[node * n + k] -= offset[k];
            }
        }
        let shifted = map.with_values(values);
        let (next, next_report) = relax_with(&shifted, Some(&shifted.values()[mb..]), opts)?;
        map = next;
        report = SolveReport {
            iterations: report.iterations + next_report.iterations,
            polish_steps: report.polish_steps + next_report.polish_steps,
            ..next_report
        };
    }
    map.values_mut()[origin * n..(origin + 1) * n].copy_from_slice(p);
    report.conformality_defect = super::conformality_defect(&map);
    Ok((map, report))
}
