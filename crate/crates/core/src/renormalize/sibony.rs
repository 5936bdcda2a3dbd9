use serde::{Deserialize, Serialize};

use super::RenormError;
use crate::disc::{DiscError, DiscGrid};

/// Relative slack of the discrete subharmonicity test for `log u`: at each
/// node the Shortley-Weller Laplacian `sum w_k (f_k - f_0)` must be at
/// least `-SIBONY_LOG_REL * sum w_k |f_k - f_0|`. Functions like
/// `log |z|^p` are exactly harmonic, so an absolute slack would either
/// reject them on truncation error or accept anything; the truncation error
/// relative to the stencil's own scale is `O((h / |z|)^2)`.
pub const SIBONY_LOG_REL: f64 = 0.1;

/// Slack on `u <= |z|^2` and `Delta u(0) <= 4`.
const TAU_BOUND: f64 = 1e-9;
/// Tolerance for the equality diagnostics.
const TAU_EQUAL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SibonyReport {
    /// Conclusion (a): `u(z) <= |z|^2` at every node (slack 1e-9).
    pub bound_holds: bool,
    pub worst_node: usize,
    /// `max (u - |z|^2)` over the nodes.
    pub worst_excess: f64,
    /// Fourth-order five-point-per-axis Laplacian at the origin.
    pub laplacian_at_origin: f64,
    /// Conclusion (b): `Delta u(0) <= 4` (slack 1e-9).
    pub laplacian_ok: bool,
    /// `u < |z|^2` at every interior node but the origin and `Delta u(0) < 4`.
    pub strict: bool,
    /// `|u - |z|^2| <= 1e-6` everywhere.
    pub equality_everywhere: bool,
    /// `|Delta u(0) - 4| <= 1e-6`.
    pub laplacian_equality: bool,
    /// Nodes whose subharmonicity stencil touches a zero of `u` (skipped).
    pub skipped_nodes: usize,
    /// Most negative `Laplacian / stencil scale` of `log u`.
    pub log_worst_ratio: f64,
    pub passes: bool,
}

/// Discrete Laplacian at the origin, fourth order along each axis
/// (`(-f(2h) + 16 f(h) - 30 f(0) + 16 f(-h) - f(-2h)) / 12 h^2`), exact on
/// quartic polynomials; falls back to the five-point stencil on coarse grids.
fn laplacian_at_origin(grid: &DiscGrid, u: &[f64]) -> f64 {
    let n = grid.resolution();
    let c = (n - 1) / 2;
    let h = grid.spacing();
    let at = |i: isize, j: isize| grid.lattice_node((c as isize + i) as usize, (c as isize + j) as usize).map(|k| u[k]);
    let mut total = 0.0;
    for axis in 0..2 {
        let pt = |s: isize| if axis == 0 { at(s, 0) } else { at(0, s) };
        let u0 = u[grid.origin()];
        match (pt(-2), pt(-1), pt(1), pt(2)) {
            (Some(m2), Some(m1), Some(p1), Some(p2)) => {
                total += (-m2 + 16.0 * m1 - 30.0 * u0 + 16.0 * p1 - p2) / (12.0 * h * h);
            }
            (_, Some(m1), Some(p1), _) => total += (m1 - 2.0 * u0 + p1) / (h * h),
            _ => return f64::NAN,
        }
    }
    total
}

/// Checks the hypotheses of Sibony's lemma on the grid values `u` (one per
/// node): `0 <= u <= 1`, `u(0) = 0`, and `log u` subharmonic (zeros of `u`
/// pass vacuously, with `log 0 = -inf`). Then checks the conclusions
/// `u <= |z|^2` and `Delta u(0) <= 4`, with equality diagnostics.
///
/// A function meeting the hypotheses but not the conclusions yields a
/// report with `passes == false`; failed hypotheses are errors.
pub fn sibony_verify(grid: &DiscGrid, u: &[f64]) -> Result<SibonyReport, RenormError> {
    if u.len() != grid.n_nodes() {
        return Err(DiscError::ShapeMismatch {
            expected: grid.n_nodes(),
            got: u.len(),
        }
        .into());
    }
    for (i, &v) in u.iter().enumerate() {
        if !(v >= -TAU_BOUND && v <= 1.0 + TAU_BOUND) {
            return Err(RenormError::PreconditionFailed {
                node: i,
                reason: format!("u = {v} outside [0, 1]"),
            });
        }
    }
    let o = grid.origin();
    if u[o].abs() > TAU_BOUND {
        return Err(RenormError::PreconditionFailed {
            node: o,
            reason: format!("u(0) = {} is not zero", u[o]),
        });
    }
    let zero = |v: f64| v <= 0.0;
    let mut skipped = 0;
    let mut log_worst = f64::INFINITY;
    for i in 0..grid.n_interior() {
        if zero(u[i]) {
            continue;
        }
        let nb = grid.neighbors(i);
        if nb.iter().any(|&(k, _)| zero(u[k])) {
            skipped += 1;
            continue;
        }
        let f0 = u[i].ln();
        let w = grid.laplacian_weights(i);
        let (mut lap, mut scale) = (0.0, 0.0);
        for (&(k, _), wt) in nb.iter().zip(w) {
            let d = u[k].ln() - f0;
            lap += wt * d;
            scale += wt * d.abs();
        }
        let ratio = if scale > 0.0 { lap / scale } else { 0.0 };
        log_worst = log_worst.min(ratio);
        if ratio < -SIBONY_LOG_REL {
            return Err(RenormError::PreconditionFailed {
                node: i,
                reason: format!("log u is not subharmonic (Laplacian/scale = {ratio:.3e})"),
            });
        }
    }

    let mut worst_node = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut strict = true;
    let mut max_dev = 0.0_f64;
    for (i, &[x, y]) in grid.nodes().iter().enumerate() {
        let r2 = x * x + y * y;
        let e = u[i] - r2;
        if e > worst_excess {
            worst_excess = e;
            worst_node = i;
        }
        max_dev = max_dev.max(e.abs());
        if grid.is_interior(i) && i != o && e >= 0.0 {
            strict = false;
        }
    }
    let lap0 = laplacian_at_origin(grid, u);
    let bound_holds = worst_excess <= TAU_BOUND;
    let laplacian_ok = lap0 <= 4.0 + TAU_BOUND;
    Ok(SibonyReport {
        bound_holds,
        worst_node,
        worst_excess,
        laplacian_at_origin: lap0,
        laplacian_ok,
        strict: strict && lap0 < 4.0,
        equality_everywhere: max_dev <= TAU_EQUAL,
        laplacian_equality: (lap0 - 4.0).abs() <= TAU_EQUAL,
        skipped_nodes: skipped,
        log_worst_ratio: if log_worst.is_finite() { log_worst } else { 0.0 },
        passes: bound_holds && laplacian_ok,
    })
}
