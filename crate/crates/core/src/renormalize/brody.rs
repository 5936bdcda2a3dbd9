use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::family::{MapFamily, SchwarzFamily};
use super::zalcman::{zalcman_rescale, RescalingSequence, ZalcmanConfig};
use super::RenormError;
use crate::disc::{tension_residual, weakly_conformal_check, DiscGrid, DiscMap};
use crate::linalg;
use crate::tolerances::TAU_C;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BrodyConfig {
    /// Radii `R` on which the limit is examined (`g_n` restricted to `R D`).
    pub radii: Vec<f64>,
    pub resolution: usize,
    /// Number of trailing maps compared for the Cauchy check.
    pub tail: usize,
    /// Sup-norm Cauchy tolerance (chart units).
    pub cauchy_tol: f64,
    /// Tension residual threshold for the limit.
    pub tau_limit: f64,
    pub tau_c: f64,
    pub zalcman: ZalcmanConfig,
}

impl Default for BrodyConfig {
    fn default() -> Self {
        Self {
            radii: vec![1.0, 2.0, 4.0],
            resolution: 33,
            tail: 4,
            cauchy_tol: 1e-6,
            tau_limit: 1e-6,
            tau_c: TAU_C,
            zalcman: ZalcmanConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BrodyVerdict {
    NonconstantLimit,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusCheck {
    pub radius: f64,
    /// Indices `n` of the maps compared (all with `R_n >= radius`).
    pub maps_used: Vec<usize>,
    /// Sup-norm distance between consecutive compared maps.
    pub cauchy_diffs: Vec<f64>,
    pub cauchy_ok: bool,
    /// Tension residual of the last map on `radius * D`.
    pub tension_residual: f64,
    pub conformal_coarse: bool,
    pub conformal_fine: bool,
    pub worst_conformal_defect: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BrodyReport {
    pub verdict: BrodyVerdict,
    /// Why the verdict is inconclusive, when it is.
    pub reason: Option<String>,
    pub k: f64,
    /// `J_{g(0)}(g(1))` for the last rescaled map; nonconstant when `>= k/2`.
    pub limit_j: f64,
    pub nonconstant: bool,
    pub radii: Vec<RadiusCheck>,
    pub sequence: Option<RescalingSequence>,
    /// The last rescaled map on each radius, as a disc map `zeta -> g(R zeta)`.
    #[serde(skip)]
    pub limits: Vec<DiscMap>,
}

fn inconclusive(k: f64, reason: String, sequence: Option<RescalingSequence>) -> BrodyReport {
    BrodyReport {
        verdict: BrodyVerdict::Inconclusive,
        reason: Some(reason),
        k,
        limit_j: 0.0,
        nonconstant: false,
        radii: Vec::new(),
        sequence,
        limits: Vec::new(),
    }
}

fn disc_of(family: &dyn MapFamily, seq: &RescalingSequence, i: usize, radius: f64, resolution: usize) -> Result<DiscMap, RenormError> {
    let grid = DiscGrid::shared(resolution)?;
    Ok(DiscMap::from_fn(grid, family.target().clone(), |x, y| {
        seq.g(family, i, Complex64::new(radius * x, radius * y))
    })?)
}

/// Runs [`zalcman_rescale`] and examines the rescaled maps on each radius:
/// Cauchy in `n` (sup norm over the disc nodes), nonconstant
/// (`J_{g(0)}(g(1)) >= k/2`), harmonic (tension residual at most
/// `tau_limit`) and weakly conformal at two resolutions. Reports
/// `NonconstantLimit` only when every check passes; a refused extraction
/// (invalid witness) is `Inconclusive`, other errors propagate.
pub fn brody_extract(family: &dyn MapFamily, sf: &SchwarzFamily, k: f64, cfg: &BrodyConfig) -> Result<BrodyReport, RenormError> {
    if cfg.radii.is_empty() || cfg.tail < 2 {
        return Err(RenormError::InvalidConfig("need at least one radius and a tail of two maps".into()));
    }
    let seq = match zalcman_rescale(family, sf, k, &cfg.zalcman) {
        Ok(s) => s,
        Err(RenormError::WitnessInvalid { n, detail }) => {
            return Ok(inconclusive(k, format!("extraction refused at n = {n}: {detail}"), None));
        }
        Err(e) => return Err(e),
    };
    let last = seq.steps.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let limit_j = sf.j(&seq.g(family, last, zero), &seq.g(family, last, one));
    let nonconstant = limit_j >= 0.5 * k;

    let target = family.target();
    let mut radii = Vec::new();
    let mut limits = Vec::new();
    for &radius in &cfg.radii {
        let eligible: Vec<usize> = (0..seq.steps.len()).filter(|&i| seq.steps[i].r_n >= radius).collect();
        let used: Vec<usize> = eligible.iter().rev().take(cfg.tail).rev().copied().collect();
        let maps: Vec<DiscMap> = used
            .iter()
            .map(|&i| disc_of(family, &seq, i, radius, cfg.resolution))
            .collect::<Result<_, _>>()?;
        let diffs: Vec<f64> = maps
            .windows(2)
            .map(|w| {
                (0..w[0].grid().n_nodes())
                    .map(|node| linalg::norm2(&target.displacement(w[0].value(node), w[1].value(node))))
                    .fold(0.0, f64::max)
            })
            .collect();
        let cauchy_ok = !diffs.is_empty() && diffs.iter().all(|d| *d <= cfg.cauchy_tol);
        let Some(limit) = maps.last().cloned() else {
            radii.push(RadiusCheck {
                radius,
                maps_used: Vec::new(),
                cauchy_diffs: Vec::new(),
                cauchy_ok: false,
                tension_residual: f64::INFINITY,
                conformal_coarse: false,
                conformal_fine: false,
                worst_conformal_defect: f64::INFINITY,
                passes: false,
            });
            continue;
        };
        let tension = tension_residual(&limit)?;
        let coarse = weakly_conformal_check(&limit, cfg.tau_c);
        let fine_map = disc_of(family, &seq, *used.last().unwrap(), radius, 2 * cfg.resolution - 1)?;
        let fine = weakly_conformal_check(&fine_map, cfg.tau_c);
        let passes = cauchy_ok && tension <= cfg.tau_limit && coarse.passes && fine.passes;
        radii.push(RadiusCheck {
            radius,
            maps_used: used.iter().map(|&i| seq.steps[i].n).collect(),
            cauchy_diffs: diffs,
            cauchy_ok,
            tension_residual: tension,
            conformal_coarse: coarse.passes,
            conformal_fine: fine.passes,
            worst_conformal_defect: coarse.worst_defect.max(fine.worst_defect),
            passes,
        });
        limits.push(limit);
    }
    let all = radii.iter().all(|r| r.passes);
    let (verdict, reason) = if all && nonconstant {
        (BrodyVerdict::NonconstantLimit, None)
    } else if !nonconstant {
        (BrodyVerdict::Inconclusive, Some(format!("limit looks constant: J(g(0), g(1)) = {limit_j:.3e}")))
    } else {
        let bad: Vec<String> = radii.iter().filter(|r| !r.passes).map(|r| r.radius.to_string()).collect();
        (BrodyVerdict::Inconclusive, Some(format!("checks failed on radii {}", bad.join(", "))))
    };
    Ok(BrodyReport {
        verdict,
        reason,
        k,
        limit_j,
        nonconstant,
        radii,
        sequence: Some(seq),
        limits,
    })
}
