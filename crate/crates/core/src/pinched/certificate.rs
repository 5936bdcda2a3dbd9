use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{claim_disc, rescaled_normal_metric, ClaimOptions, PinchedError};
use crate::disc::{relax_centered, tension_residual, DiscMap, RelaxOptions};
use crate::geometry::{geodesic_exp_lifted, ChartedMetric, DEFAULT_STEPS};
use crate::kobayashi::{
    certify_pinch, kobayashi_royden_lower, kobayashi_royden_upper, KobayashiError, PinchCertificate, UpperBudget,
};
use crate::linalg;
use crate::tolerances::TAU_GAP;

/// The bound `2 |v|_h / t0` together with the composite disc
/// `exp_p o (t0 E) o u'` that realises it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpperBoundCertificate {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub t0: f64,
    pub bound: f64,
    pub alpha: f64,
    /// `1 / lambda` with `du(0) e1 = lambda v` on the composite disc.
    pub composite_upper: f64,
    /// Tension of the composite before re-relaxation in the target chart.
    pub composite_raw_residual: f64,
    pub composite_tension_residual: f64,
    pub composite_defect: f64,
    pub composite_admissible: bool,
    /// `composite_admissible` and `composite_upper <= bound (1 + tau_gap)`.
    pub consistent: bool,
}

/// Coordinates of `v` in the orthonormal frame `e` (`v = E a`, `a = E^T g v`).
fn frame_coords(n: usize, e: &[f64], g: &[f64], v: &[f64]) -> Vec<f64> {
    let gv: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g[i * n + j] * v[j]).sum()).collect();
    (0..n).map(|b| (0..n).map(|i| e[i * n + b] * gv[i]).sum()).collect()
}

/// `2 sqrt(h(p)(v, v)) / t0`, cross-checked by building the claim disc for
/// `h^{t0}_p`, composing it with `x -> exp_p(t0 E x)`, re-relaxing in `m`
/// and reading `F_hat` off the composite.
pub fn upper_bound_certificate(
    m: &ChartedMetric,
    p: &[f64],
    v: &[f64],
    t0: f64,
    opts: &ClaimOptions,
) -> Result<UpperBoundCertificate, PinchedError> {
    m.check_point(p)?;
    let n = m.dim();
    if v.len() != n {
        return Err(PinchedError::InvalidConfig("v must match the chart dimension".into()));
    }
    let v_norm = m.norm(p, v);
    if !(v_norm > 0.0) {
        return Err(KobayashiError::ZeroVector.into());
    }
    let bound = 2.0 * v_norm / t0;
    let e = m.orthonormal_frame(p)?;
    let mut g = vec![0.0; n * n];
    m.metric_raw(p, &mut g);
    let a = frame_coords(n, &e, &g, v);
    // Second direction: the least parallel axis, made orthogonal to a.
    let k = (0..n)
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .expect("dimension >= 2");
    let an2 = linalg::dot(&a, &a);
    let w: Vec<f64> = (0..n)
        .map(|i| if i == k { 1.0 } else { 0.0 } - a[k] * a[i] / an2)
        .collect();

    let hp_t = rescaled_normal_metric(m, p, t0)?;
    let claim = claim_disc(&hp_t, &a, &w, opts)?;

    let grid = claim.map.grid().clone();
    let mut values = Vec::with_capacity(grid.n_nodes() * n);
    for i in 0..grid.n_nodes() {
        let x = claim.map.value(i);
        let tangent: Vec<f64> = (0..n).map(|r| t0 * (0..n).map(|c| e[r * n + c] * x[c]).sum::<f64>()).collect();
        values.extend(geodesic_exp_lifted(m, p, &tangent, DEFAULT_STEPS)?);
    }
    let composite = DiscMap::new(grid, m.clone(), values)?;
    let raw = tension_residual(&composite)?;
    let relax = RelaxOptions {
        tau_h: opts.tau_h,
        max_iter: opts.max_iter,
        ..RelaxOptions::default()
    };
    let (u, report) = relax_centered(&composite, p, &relax)?;
    let (ux, _) = u.differential_at_origin();
    let lambda = m.inner(p, &ux, v) / (v_norm * v_norm);
    let admissible = report.converged && report.conformality_defect <= opts.tau_c && lambda > 0.0;
    let composite_upper = if lambda > 0.0 { 1.0 / lambda } else { f64::INFINITY };
    Ok(UpperBoundCertificate {
        p: p.to_vec(),
        v: v.to_vec(),
        t0,
        bound,
        alpha: claim.alpha,
        composite_upper,
        composite_raw_residual: raw,
        composite_tension_residual: report.tension_residual,
        composite_defect: report.conformality_defect,
        composite_admissible: admissible,
        consistent: admissible && composite_upper <= bound * (1.0 + TAU_GAP),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiLipschitzConfig {
    pub budget: UpperBudget,
    pub tau_gap: f64,
    /// Curvature samples for the pinch certificate.
    pub pinch_samples: usize,
    pub seed: u64,
    /// Rows (from the first) that also get a composite-disc cross-check.
    pub cross_checks: usize,
    pub claim: ClaimOptions,
}

impl Default for BiLipschitzConfig {
    fn default() -> Self {
        Self {
            budget: UpperBudget::default(),
            tau_gap: TAU_GAP,
            pinch_samples: 200,
            seed: 0,
            cross_checks: 1,
            claim: ClaimOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiLipschitzRow {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub v_norm: f64,
    pub lower: f64,
    /// Disc-search estimate before capping.
    pub search_upper: f64,
    /// `min(search_upper, 2 |v| / t0)`.
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiLipschitzTolerances {
    pub tau_gap: f64,
    pub tau_h: f64,
    pub tau_c: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiLipschitzCertificate {
    pub model: String,
    pub c: f64,
    pub t0: f64,
    /// `sqrt(c / 8)`.
    pub lower_const: f64,
    /// `2 / t0`.
    pub upper_const: f64,
    /// `C = max(2 / t0, sqrt(8 / c))`, so `|v|/C <= F(p, v) <= C |v|`.
    pub bilipschitz_constant: f64,
    pub rows: Vec<BiLipschitzRow>,
    pub cross_checks: Vec<UpperBoundCertificate>,
    pub pinch: PinchCertificate,
    pub tolerances: BiLipschitzTolerances,
    pub version: String,
}

impl BiLipschitzCertificate {
    /// Plain-text table of the evidence rows.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model {}  c = {}  t0 = {:.6}  lower_const = {:.6}  upper_const = {:.6}  C = {:.6}",
            self.model, self.c, self.t0, self.lower_const, self.upper_const, self.bilipschitz_constant
        );
        let _ = writeln!(s, "{:>4} {:>12} {:>12} {:>12} {:>12}  ok", "row", "|v|_g", "lower", "upper", "search");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>4} {:>12.6} {:>12.6} {:>12.6} {:>12.6}  {}",
                i,
                r.v_norm,
                r.lower,
                r.upper,
                r.search_upper,
                r.lower_ok && r.upper_ok
            );
        }
        s
    }
}

/// Two-sided certificate `sqrt(c/8)|v| <= F_hat(p, v) <= (2/t0)|v|` over
/// the sampled rows (each inequality with slack `1 + tau_gap`).
///
/// Requires a certified pinch `K <= -c`; rows run in parallel and are
/// assembled in input order.
pub fn bilipschitz_verify(
    m: &ChartedMetric,
    c: f64,
    t0: f64,
    samples: &[(Vec<f64>, Vec<f64>)],
    cfg: &BiLipschitzConfig,
) -> Result<BiLipschitzCertificate, PinchedError> {
    if !(t0 > 0.0) {
        return Err(PinchedError::InvalidConfig(format!("t0 must be positive, got {t0}")));
    }
    let pinch = certify_pinch(m, c, cfg.pinch_samples, cfg.seed)?;
    let lower_const = (c / 8.0).sqrt();
    let upper_const = 2.0 / t0;
    if lower_const > upper_const {
        return Err(PinchedError::InvalidConfig(format!(
            "empty bracket: sqrt(c/8) = {lower_const} exceeds 2/t0 = {upper_const}"
        )));
    }
    let rows: Result<Vec<BiLipschitzRow>, PinchedError> = samples
        .par_iter()
        .map(|(p, v)| {
            let v_norm = m.norm(p, v);
            let lower = kobayashi_royden_lower(m, p, v, &pinch)?;
            let search_upper = if v_norm > 0.0 {
                kobayashi_royden_upper(m, p, v, &cfg.budget)?.upper
            } else {
                0.0
            };
            let formula = upper_const * v_norm;
            let upper = search_upper.min(formula);
            Ok(BiLipschitzRow {
                p: p.clone(),
                v: v.clone(),
                v_norm,
                lower,
                search_upper,
                upper,
                lower_ok: lower <= upper * (1.0 + cfg.tau_gap),
                upper_ok: upper <= formula * (1.0 + cfg.tau_gap),
            })
        })
        .collect();
    let rows = rows?;
    let mut cross_checks = Vec::new();
    for (p, v) in samples.iter().filter(|(p, v)| m.norm(p, v) > 0.0).take(cfg.cross_checks) {
        cross_checks.push(upper_bound_certificate(m, p, v, t0, &cfg.claim)?);
    }
    let mut bad: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !(r.lower_ok && r.upper_ok))
        .map(|(i, _)| i)
        .collect();
    if cross_checks.iter().any(|c| !c.consistent) {
        bad.extend(cross_checks.iter().enumerate().filter(|(_, c)| !c.consistent).map(|(i, _)| i));
        bad.sort_unstable();
        bad.dedup();
    }
    if !bad.is_empty() {
        return Err(PinchedError::CertificateFailure { rows: bad });
    }
    Ok(BiLipschitzCertificate {
        model: m.name().to_string(),
        c,
        t0,
        lower_const,
        upper_const,
        bilipschitz_constant: upper_const.max((8.0 / c).sqrt()),
        rows,
        cross_checks,
        pinch,
        tolerances: BiLipschitzTolerances {
            tau_gap: cfg.tau_gap,
            tau_h: cfg.budget.tau_h,
            tau_c: cfg.budget.tau_c,
        },
        version: crate::VERSION.to_string(),
    })
}
