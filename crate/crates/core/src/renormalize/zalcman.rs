use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{MapFamily, SchwarzFamily};
use super::RenormError;

/// A point and displacement in the unit disc, `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: [f64; 2],
    pub kappa: [f64; 2],
}

impl Witness {
    fn t(&self) -> Complex64 {
        Complex64::new(self.t[0], self.t[1])
    }
    fn kappa(&self) -> Complex64 {
        Complex64::new(self.kappa[0], self.kappa[1])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZalcmanConfig {
    /// Rings of the polar search grid over the disc.
    pub rings: usize,
    pub angles: usize,
    /// Ray directions for the displacement radius search.
    pub directions: usize,
    /// A witness sequence counts as tending to zero when its displacements
    /// strictly decrease and the last is at most `kappa_min`.
    pub kappa_min: f64,
    /// Caller-supplied witnesses `(t~_n, kappa~_n)` for hypothesis (iv);
    /// searched on the grid when absent.
    pub witnesses: Option<Vec<Witness>>,
    /// Angular samples for the conclusion (b) check.
    pub check_angles: usize,
}

impl Default for ZalcmanConfig {
    fn default() -> Self {
        Self {
            rings: 8,
            angles: 16,
            directions: 16,
            kappa_min: 0.05,
            witnesses: None,
            check_angles: 8,
        }
    }
}

/// One rescaled map `g_n(t) = f_n(t_n + kappa_n t)` on `(R_n + alpha+) D`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RescalingStep {
    pub n: usize,
    pub t: [f64; 2],
    pub kappa: [f64; 2],
    pub r_n: f64,
    /// `J_{g_n(0)}(g_n(1))`.
    pub j_value: f64,
    pub witness: Witness,
    /// Largest `J_{g_n(t)}(g_n(t + u)) / s(|u|)` over the check samples.
    pub b_worst_ratio: f64,
    pub b_samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RescalingSequence {
    pub family: String,
    pub k: f64,
    pub schwarz: SchwarzFamily,
    pub steps: Vec<RescalingStep>,
    pub config: ZalcmanConfig,
}

impl RescalingSequence {
    /// `g_n(t)` for the step at position `i`.
    pub fn g(&self, family: &dyn MapFamily, i: usize, t: Complex64) -> Vec<f64> {
        let s = &self.steps[i];
        let base = Complex64::new(s.t[0], s.t[1]);
        let kappa = Complex64::new(s.kappa[0], s.kappa[1]);
        family.eval(s.n, base + kappa * t)
    }
}

/// Relative tolerance under which radii and scores count as tied.
const TIE_REL: f64 = 1e-9;

fn c(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Smallest radius `r <= rmax` along any of the ray directions with
/// `J_{f_n(t)}(f_n(t + r e^{i theta})) >= k`, and that displacement.
fn displacement_radius(
    family: &dyn MapFamily,
    sf: &SchwarzFamily,
    n: usize,
    t: Complex64,
    rmax: f64,
    k: f64,
    directions: usize,
) -> Option<Complex64> {
    if !(rmax > 0.0) {
        return None;
    }
    let ft = family.eval(n, t);
    let found: Vec<Complex64> = (0..directions)
        .filter_map(|d| {
            let dir = Complex64::from_polar(1.0, std::f64::consts::TAU * d as f64 / directions as f64);
            let j = |r: f64| sf.j(&ft, &family.eval(n, t + dir * r));
            let scan = |i: usize| rmax * 2f64.powf(-((40 - i) as f64) / 2.0);
            let first = (0..=40).find(|&i| j(scan(i)) >= k)?;
            if first == 0 {
                return Some(dir * scan(0));
            }
            let (mut lo, mut hi) = (scan(first - 1), scan(first));
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if j(mid) >= k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(dir * hi)
        })
        .collect();
    // Radii equal up to the bisection noise count as ties, resolved by the
    // first direction so that the choice does not flicker with `n`.
    let min = found.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    found.into_iter().find(|z| z.norm() <= min * (1.0 + TIE_REL))
}

/// Polar grid: the origin, then `rings - 1` rings of radius
/// `i / rings * outer` with `angles` points each.
fn polar_grid(rings: usize, angles: usize, outer: f64) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for i in 1..rings {
        let r = i as f64 / rings as f64 * outer;
        for a in 0..angles {
            pts.push(Complex64::from_polar(r, std::f64::consts::TAU * a as f64 / angles as f64));
        }
    }
    pts
}

/// Ordering used for tie-breaks: smaller `|t|`, then lexicographic.
fn tie_key(t: Complex64) -> (f64, f64, f64) {
    (t.norm(), t.re, t.im)
}

fn search_witnesses(family: &dyn MapFamily, sf: &SchwarzFamily, k: f64, cfg: &ZalcmanConfig) -> Result<Vec<Witness>, RenormError> {
    let grid = polar_grid(cfg.rings, cfg.angles, 0.5);
    (1..=family.len())
        .map(|n| {
            let found: Vec<(Complex64, Complex64)> = grid
                .par_iter()
                .filter_map(|&t| {
                    let rmax = (1.0 - 2.0 * t.norm()) * (1.0 - 1e-9);
                    displacement_radius(family, sf, n, t, rmax, k, cfg.directions).map(|kap| (t, kap))
                })
                .collect();
            let min = found.iter().map(|w| w.1.norm()).fold(f64::INFINITY, f64::min);
            found
                .into_iter()
                .filter(|w| w.1.norm() <= min * (1.0 + TIE_REL))
                .min_by(|a, b| tie_key(a.0).partial_cmp(&tie_key(b.0)).unwrap())
                .map(|(t, kap)| Witness { t: c(t), kappa: c(kap) })
                .ok_or_else(|| RenormError::WitnessInvalid {
                    n,
                    detail: format!("no displacement with 2|t| + |kappa| < 1 reaches J >= {k}"),
                })
        })
        .collect()
}

fn check_witnesses(family: &dyn MapFamily, sf: &SchwarzFamily, k: f64, ws: &[Witness], kappa_min: f64) -> Result<(), RenormError> {
    if ws.len() != family.len() {
        return Err(RenormError::InvalidConfig(format!(
            "{} witnesses for {} maps",
            ws.len(),
            family.len()
        )));
    }
    for (i, w) in ws.iter().enumerate() {
        let n = i + 1;
        let (t, kap) = (w.t(), w.kappa());
        if !(2.0 * t.norm() + kap.norm() < 1.0) {
            return Err(RenormError::WitnessInvalid {
                n,
                detail: format!("2|t| + |kappa| = {} >= 1", 2.0 * t.norm() + kap.norm()),
            });
        }
        let j = sf.j(&family.eval(n, t), &family.eval(n, t + kap));
        if !(j >= k) {
            return Err(RenormError::WitnessInvalid {
                n,
                detail: format!("J = {j:.3e} < k = {k}"),
            });
        }
        if i > 0 && !(kap.norm() < ws[i - 1].kappa().norm()) {
            return Err(RenormError::WitnessInvalid {
                n,
                detail: format!(
                    "|kappa| = {:.3e} does not decrease (previous {:.3e})",
                    kap.norm(),
                    ws[i - 1].kappa().norm()
                ),
            });
        }
    }
    let last = ws.last().map_or(f64::INFINITY, |w| w.kappa().norm());
    if !(last <= kappa_min) {
        return Err(RenormError::WitnessInvalid {
            n: ws.len(),
            detail: format!("final |kappa| = {last:.3e} exceeds kappa_min = {kappa_min}"),
        });
    }
    Ok(())
}

/// Constructive Zalcman rescaling. Verifies the witness of hypothesis (iv)
/// (searching for one on the grid when none is supplied), then for each `n`
/// picks the grid point `t_n` maximising `(1 - |t|) / r_n(t)`, where
/// `r_n(t)` is the smallest displacement with `J_{f_n(t)}(f_n(t + kappa))
/// >= k`; `kappa_n` realises `r_n(t_n)` and `R_n = (1 - |t_n|)/|kappa_n| -
/// alpha+`. Conclusion (b) is then checked on samples of `t in R_n D`,
/// `u in alpha- D`, exactly as stated (no slack).
pub fn zalcman_rescale(
    family: &dyn MapFamily,
    sf: &SchwarzFamily,
    k: f64,
    cfg: &ZalcmanConfig,
) -> Result<RescalingSequence, RenormError> {
    if family.len() < 2 || !(k > 0.0) || cfg.rings < 2 || cfg.angles == 0 || cfg.directions == 0 {
        return Err(RenormError::InvalidConfig(
            "need at least two maps, k > 0 and a nonempty search grid".into(),
        ));
    }
    let witnesses = match &cfg.witnesses {
        Some(w) => w.clone(),
        None => search_witnesses(family, sf, k, cfg)?,
    };
    check_witnesses(family, sf, k, &witnesses, cfg.kappa_min)?;

    let grid = polar_grid(cfg.rings, cfg.angles, 1.0);
    let mut steps: Vec<RescalingStep> = Vec::with_capacity(family.len());
    for n in 1..=family.len() {
        let cands: Vec<(Complex64, Complex64, f64)> = grid
            .par_iter()
            .filter_map(|&t| {
                let rmax = (1.0 - t.norm()) * (1.0 - 1e-9);
                displacement_radius(family, sf, n, t, rmax, k, cfg.directions)
                    .map(|kap| (t, kap, (1.0 - t.norm()) / kap.norm()))
            })
            .collect();
        let best = cands.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        let Some((t, kappa, _)) = cands
            .into_iter()
            .filter(|c| c.2 >= best * (1.0 - TIE_REL))
            .min_by(|a, b| tie_key(a.0).partial_cmp(&tie_key(b.0)).unwrap())
        else {
            return Err(RenormError::ExtractionFailed {
                n,
                detail: "no grid point reaches the threshold k".into(),
            });
        };
        let r_n = (1.0 - t.norm()) / kappa.norm() - sf.alpha_plus;
        let g = |s: Complex64| family.eval(n, t + kappa * s);
        let j_value = sf.j(&g(Complex64::new(0.0, 0.0)), &g(Complex64::new(1.0, 0.0)));
        if !(j_value >= k) {
            return Err(RenormError::ExtractionFailed {
                n,
                detail: format!("J(g(0), g(1)) = {j_value:.3e} < k"),
            });
        }
        let m = cfg.check_angles.max(1);
        let mut worst = 0.0_f64;
        let mut count = 0;
        for tf in [0.0, 0.25, 0.5, 0.75, 0.999] {
            for ta in 0..m {
                let tt = Complex64::from_polar(tf * r_n, std::f64::consts::TAU * ta as f64 / m as f64);
                let gt = g(tt);
                for uf in [0.25, 0.5, 0.999] {
                    for ua in 0..m {
                        let u = Complex64::from_polar(
                            uf * sf.alpha_minus,
                            std::f64::consts::TAU * (ua as f64 + 0.5) / m as f64,
                        );
                        let ratio = sf.j(&gt, &g(tt + u)) / sf.s(u.norm());
                        worst = worst.max(ratio);
                        count += 1;
                    }
                }
            }
        }
        if !(worst <= 1.0) {
            return Err(RenormError::ExtractionFailed {
                n,
                detail: format!("J(g(t), g(t + u)) / s(|u|) reaches {worst:.4}"),
            });
        }
        if let Some(prev) = steps.last() {
            if !(r_n > prev.r_n) {
                return Err(RenormError::ExtractionFailed {
                    n,
                    detail: format!("R_n = {r_n:.4e} does not increase (previous {:.4e})", prev.r_n),
                });
            }
        }
        debug!("zalcman n={n}: t={t} kappa={kappa} R={r_n:.4e} J={j_value:.4e} worst(b)={worst:.3e}");
        steps.push(RescalingStep {
            n,
            t: c(t),
            kappa: c(kappa),
            r_n,
            j_value,
            witness: witnesses[n - 1],
            b_worst_ratio: worst,
            b_samples: count,
        });
    }
    Ok(RescalingSequence {
        family: family.name(),
        k,
        schwarz: sf.clone(),
        steps,
        config: cfg.clone(),
    })
}
