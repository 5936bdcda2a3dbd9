use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::KobayashiError;
use crate::disc::{jet_disc_unchecked, orthonormalize_plane, DiscMap, JetDisc, JetOptions};
use crate::geometry::{gaussian, geodesic_exp_lifted, ChartedMetric};
use crate::tolerances::{tau_jet, TAU_C, TAU_H};

/// Search configuration for [`kobayashi_royden_upper`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UpperBudget {
    /// Largest disc radius tried, measured in `g(p)`.
    pub r_max: f64,
    /// Ratio of consecutive radii in the descending grid.
    pub shrink: f64,
    /// Number of radii in the grid.
    pub max_radii: usize,
    /// Random planes containing `xi` tried in addition to coordinate planes
    /// (dimension >= 3 only).
    pub random_planes: usize,
    pub seed: u64,
    /// Disc grid resolution (odd).
    pub resolution: usize,
    pub tau_h: f64,
    pub tau_c: f64,
    pub max_iter: usize,
    /// Relative depth every disc node must keep inside the chart.
    pub margin: f64,
}

impl Default for UpperBudget {
    fn default() -> Self {
        Self {
            r_max: 5.0,
            shrink: 0.8,
            max_radii: 24,
            random_planes: 2,
            seed: 0,
            resolution: 65,
            tau_h: TAU_H,
            tau_c: TAU_C,
            max_iter: 60,
            margin: 5e-3,
        }
    }
}

impl UpperBudget {
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.max_radii).map(move |k| self.r_max * self.shrink.powi(k as i32))
    }

    fn jet_options(&self) -> JetOptions {
        JetOptions {
            resolution: self.resolution,
            tau_h: self.tau_h,
            tau_c: self.tau_c,
            max_iter: self.max_iter,
        }
    }

    fn validate(&self) -> Result<(), KobayashiError> {
        if !(self.r_max > 0.0) || !(self.shrink > 0.0 && self.shrink < 1.0) || self.max_radii == 0 {
            return Err(KobayashiError::InvalidConfig(
                "need r_max > 0, 0 < shrink < 1 and max_radii >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tau_h: f64,
    pub tau_c: f64,
}

/// Identification of the disc behind an upper estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscCertificate {
    /// `plane_index * max_radii + radius_index`; lowest id wins ties.
    pub id: usize,
    /// Unit second direction of the plane (in `g(p)`).
    pub w_hat: Vec<f64>,
    pub requested_radius: f64,
    /// `du(0) e_1 = r' xi + transverse`.
    pub r_prime: f64,
    pub transverse_drift: f64,
    pub tension_residual: f64,
    pub conformality_defect: f64,
}

/// Bracketed value of `F_M(p, xi)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KobayashiEstimate {
    pub p: Vec<f64>,
    pub xi: Vec<f64>,
    pub upper: f64,
    pub lower: Option<f64>,
    pub certificate: Option<DiscCertificate>,
    pub tolerances: Tolerances,
    pub discs_solved: usize,
    #[serde(skip)]
    pub disc: Option<DiscMap>,
}

/// An admissible disc through `p` and the realised jet along `xi`.
#[derive(Clone, Debug)]
pub struct AdmissibleDisc {
    pub jet: JetDisc,
    pub radius_index: usize,
    pub r_prime: f64,
    pub transverse_drift: f64,
}

/// Quick test that the image of the seed boundary keeps the chart margin.
fn boundary_ring_fits(m: &ChartedMetric, p: &[f64], v: &[f64], w: &[f64], r: f64, margin: f64) -> bool {
    const RING: usize = 16;
    let n = m.dim();
    (0..RING).all(|k| {
        let th = std::f64::consts::TAU * k as f64 / RING as f64;
        let t: Vec<f64> = (0..n).map(|i| r * (th.cos() * v[i] + th.sin() * w[i])).collect();
        match geodesic_exp_lifted(m, p, &t, 32) {
            Ok(x) => m.contains_with_margin(&x, margin),
            Err(_) => false,
        }
    })
}

/// Largest admissible jet disc in the plane spanned by `(xi, w)`.
///
/// Radii are tried in decreasing order (`r_max * shrink^k`); the first disc
/// that converges (`tension <= tau_h`), has conformality defect `<= tau_c`,
/// stays `margin`-deep in the chart and whose realised first jet is
/// parallel to `xi` up to `tau_jet` is returned, with `r'` defined by
/// projecting `du(0) e_1` onto `xi` in `g(p)`.
pub fn admissible_disc(
    m: &ChartedMetric,
    p: &[f64],
    xi: &[f64],
    w: &[f64],
    budget: &UpperBudget,
) -> Result<Option<AdmissibleDisc>, KobayashiError> {
    Ok(search_plane(m, p, xi, w, budget)?.0)
}

/// [`admissible_disc`] plus the number of discs solved.
fn search_plane(
    m: &ChartedMetric,
    p: &[f64],
    xi: &[f64],
    w: &[f64],
    budget: &UpperBudget,
) -> Result<(Option<AdmissibleDisc>, usize), KobayashiError> {
    budget.validate()?;
    let (v_hat, w_hat) = orthonormalize_plane(m, p, xi, w)?;
    let opts = budget.jet_options();
    let xi_sq = m.inner(p, xi, xi);
    let mut solved = 0;
    for (k, r) in budget.radii().enumerate() {
        if !boundary_ring_fits(m, p, &v_hat, &w_hat, r, budget.margin) {
            continue;
        }
        solved += 1;
        let jet = match jet_disc_unchecked(m, p, xi, w, r, &opts) {
            Ok(j) => j,
            Err(e) => {
                debug!("radius {r:.4}: {e}");
                continue;
            }
        };
        if !jet.report.converged || jet.report.conformality_defect > budget.tau_c {
            debug!(
                "radius {r:.4}: inadmissible (tension {:.2e}, defect {:.2e})",
                jet.report.tension_residual, jet.report.conformality_defect
            );
            continue;
        }
        let n = m.dim();
        if !(0..jet.map.grid().n_nodes()).all(|i| m.contains_with_margin(jet.map.value(i), budget.margin)) {
            continue;
        }
        let (ux, _) = jet.map.differential_at_origin();
        let r_prime = m.inner(p, &ux, xi) / xi_sq;
        if !(r_prime > 0.0) {
            continue;
        }
        let trans: Vec<f64> = (0..n).map(|i| ux[i] - r_prime * xi[i]).collect();
        let transverse_drift = m.norm(p, &trans) / (r_prime * xi_sq.sqrt());
        if transverse_drift > tau_jet(budget.tau_c, r) {
            continue;
        }
        return Ok((
            Some(AdmissibleDisc {
                jet,
                radius_index: k,
                r_prime,
                transverse_drift,
            }),
            solved,
        ));
    }
    Ok((None, solved))
}

/// Second directions of the planes searched for `xi` at `p`.
fn candidate_planes(m: &ChartedMetric, p: &[f64], xi: &[f64], budget: &UpperBudget) -> Vec<Vec<f64>> {
    let n = m.dim();
    let mut out = Vec::new();
    let xi_n = m.norm(p, xi);
    let mut coords: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let c = (m.inner(p, xi, &e) / (xi_n * m.norm(p, &e))).abs();
            (c, e)
        })
        .collect();
    // Least parallel coordinate axes first; in dimension 2 one plane is all.
    coords.sort_by(|a, b| a.0.total_cmp(&b.0));
    let coord_planes = if n == 2 { 1 } else { n - 1 };
    out.extend(coords.into_iter().take(coord_planes).map(|(_, e)| e));
    if n >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        for _ in 0..budget.random_planes {
            out.push((0..n).map(|_| gaussian(&mut rng)).collect());
        }
    }
    out
}

/// Upper estimate `F^(p, xi) = min 1/r'` over admissible discs.
///
/// Planes containing `xi` (coordinate planes plus seeded random ones) are
/// searched in parallel; in each plane the largest admissible radius is
/// used. Ties go to the lowest certificate id. `lower` is left empty (see
/// [`super::kobayashi_royden_lower`]).
pub fn kobayashi_royden_upper(
    m: &ChartedMetric,
    p: &[f64],
    xi: &[f64],
    budget: &UpperBudget,
) -> Result<KobayashiEstimate, KobayashiError> {
    budget.validate()?;
    m.check_point(p)?;
    if xi.len() != m.dim() {
        return Err(KobayashiError::InvalidConfig(format!(
            "xi has {} components, chart dimension is {}",
            xi.len(),
            m.dim()
        )));
    }
    if !(m.norm(p, xi) > 0.0) {
        return Err(KobayashiError::ZeroVector);
    }
    let planes = candidate_planes(m, p, xi, budget);
    let results: Vec<Result<(Option<AdmissibleDisc>, usize), KobayashiError>> = planes
        .par_iter()
        .map(|w| match search_plane(m, p, xi, w, budget) {
            Err(KobayashiError::Disc(crate::disc::DiscError::DegenerateInput(_))) => Ok((None, 0)),
            other => other,
        })
        .collect();
    let mut best: Option<(f64, usize, usize, AdmissibleDisc)> = None;
    let mut solved = 0;
    for (pi, r) in results.into_iter().enumerate() {
        let (d, count) = r?;
        solved += count;
        let Some(d) = d else { continue };
        let id = pi * budget.max_radii + d.radius_index;
        let val = 1.0 / d.r_prime;
        let better = match &best {
            None => true,
            Some((bv, bid, _, _)) => val < *bv || (val == *bv && id < *bid),
        };
        if better {
            best = Some((val, id, pi, d));
        }
    }
    let tolerances = Tolerances {
        tau_h: budget.tau_h,
        tau_c: budget.tau_c,
    };
    let Some((upper, id, _, d)) = best else {
        return Err(KobayashiError::NoAdmissibleDisc(format!(
            "{} planes, radii {:.3e}..{:.3e}: every disc violated (tau_h, tau_c) = ({:.1e}, {:.1e}) or the chart margin",
            planes.len(),
            budget.r_max * budget.shrink.powi(budget.max_radii as i32 - 1),
            budget.r_max,
            budget.tau_h,
            budget.tau_c
        )));
    };
    Ok(KobayashiEstimate {
        p: p.to_vec(),
        xi: xi.to_vec(),
        upper,
        lower: None,
        certificate: Some(DiscCertificate {
            id,
            w_hat: d.jet.w_hat.clone(),
            requested_radius: d.jet.radius,
            r_prime: d.r_prime,
            transverse_drift: d.transverse_drift,
            tension_residual: d.jet.report.tension_residual,
            conformality_defect: d.jet.report.conformality_defect,
        }),
        tolerances,
        discs_solved: solved,
        disc: Some(d.jet.map),
    })
}
