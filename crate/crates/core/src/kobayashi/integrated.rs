use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kobayashi_royden_upper, KobayashiError, UpperBudget};
use crate::geometry::{gaussian, geodesic_exp_lifted, geodesic_log, ChartedMetric, DEFAULT_STEPS};
use crate::linalg;

/// Path family for [`integrated_distance`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    pub budget: UpperBudget,
    /// Polyline segments per path.
    pub segments: usize,
    /// Random perturbations of the base path.
    pub perturbations: usize,
    /// Perturbation amplitude relative to the chart length of `q - p`.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            budget: UpperBudget {
                resolution: 41,
                ..UpperBudget::default()
            },
            segments: 8,
            perturbations: 32,
            amplitude: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegratedDistanceResult {
    pub value: f64,
    /// Vertices of the minimising polyline (lifted chart coordinates).
    pub path: Vec<Vec<f64>>,
    /// `F_hat(midpoint, chord)` per segment of `path`.
    pub segment_values: Vec<f64>,
    pub samples_per_segment: usize,
    /// Paths evaluated to completion or pruned (the base path included).
    pub paths_evaluated: usize,
}

/// Base polyline from `p` to `q`: the geodesic when shooting succeeds,
/// otherwise the chart segment.
fn base_path(m: &ChartedMetric, p: &[f64], q: &[f64], segments: usize) -> Vec<Vec<f64>> {
    let disp = m.displacement(p, q);
    let straight = || -> Vec<Vec<f64>> {
        (0..=segments)
            .map(|k| {
                let t = k as f64 / segments as f64;
                p.iter().zip(&disp).map(|(a, d)| a + t * d).collect()
            })
            .collect()
    };
    let Ok(v) = geodesic_log(m, p, q, DEFAULT_STEPS) else {
        return straight();
    };
    let mut out = Vec::with_capacity(segments + 1);
    out.push(p.to_vec());
    for k in 1..segments {
        let t = k as f64 / segments as f64;
        let tv: Vec<f64> = v.iter().map(|x| t * x).collect();
        match geodesic_exp_lifted(m, p, &tv, DEFAULT_STEPS) {
            Ok(x) => out.push(x),
            Err(_) => return straight(),
        }
    }
    out.push(p.iter().zip(&disp).map(|(a, d)| a + d).collect());
    out
}

/// Per-segment `F_hat(midpoint, chord)`. Segments are evaluated in
/// parallel chunks; once the partial sum exceeds `cutoff` the path cannot
/// be the minimiser and `Ok(None)` is returned.
fn path_length(
    m: &ChartedMetric,
    path: &[Vec<f64>],
    budget: &UpperBudget,
    cutoff: f64,
) -> Result<Option<Vec<f64>>, KobayashiError> {
    let segs: Vec<(Vec<f64>, Vec<f64>)> = path
        .windows(2)
        .map(|s| {
            let chord: Vec<f64> = s[1].iter().zip(&s[0]).map(|(b, a)| b - a).collect();
            let mid: Vec<f64> = s[0].iter().zip(&s[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            (m.wrap(&mid), chord)
        })
        .collect();
    let chunk = rayon::current_num_threads().max(1);
    let mut out = Vec::with_capacity(segs.len());
    let mut partial = 0.0;
    for block in segs.chunks(chunk) {
        let vals: Result<Vec<f64>, KobayashiError> = block
            .par_iter()
            .map(|(mid, chord)| {
                if linalg::sup_norm(chord) == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(kobayashi_royden_upper(m, mid, chord, budget)?.upper)
                }
            })
            .collect();
        let vals = vals?;
        partial += vals.iter().sum::<f64>();
        out.extend(vals);
        if partial > cutoff {
            return Ok(None);
        }
    }
    Ok(Some(out))
}

/// Upper bound on the integrated (Royden) distance: the smallest
/// midpoint-rule length `sum F_hat(mid_k, x_{k+1} - x_k)` over the geodesic
/// polyline and seeded sine-series perturbations of it (modes 1..3 with
/// amplitudes decaying like `1/m`). Failures on perturbed paths skip the
/// path; a failure on the base path is returned.
pub fn integrated_distance(
    m: &ChartedMetric,
    p: &[f64],
    q: &[f64],
    cfg: &PathConfig,
) -> Result<IntegratedDistanceResult, KobayashiError> {
    m.check_point(p)?;
    m.check_point(q)?;
    if cfg.segments == 0 {
        return Err(KobayashiError::InvalidConfig("segments must be positive".into()));
    }
    let disp = m.displacement(p, q);
    if disp.iter().all(|&d| d == 0.0) {
        return Ok(IntegratedDistanceResult {
            value: 0.0,
            path: vec![p.to_vec()],
            segment_values: Vec::new(),
            samples_per_segment: 1,
            paths_evaluated: 0,
        });
    }
    let n = m.dim();
    let base = base_path(m, p, q, cfg.segments);
    let len = linalg::norm2(&disp);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut paths = vec![base.clone()];
    for _ in 0..cfg.perturbations {
        let coeffs: Vec<Vec<f64>> = (1..=3)
            .map(|mode| {
                (0..n)
                    .map(|_| cfg.amplitude * len / mode as f64 * gaussian(&mut rng))
                    .collect()
            })
            .collect();
        let path: Vec<Vec<f64>> = base
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let t = k as f64 / cfg.segments as f64;
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| {
                        xi + coeffs
                            .iter()
                            .enumerate()
                            .map(|(mi, c)| ((mi + 1) as f64 * std::f64::consts::PI * t).sin() * c[i])
                            .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let inside = path.windows(2).all(|s| {
            let mid: Vec<f64> = s[0].iter().zip(&s[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            m.contains(&s[0]) && m.contains(&mid)
        });
        if inside {
            paths.push(path);
        }
    }
    // Paths are scanned in order, each pruned as soon as its partial sum
    // exceeds the best complete length; the minimum is unaffected.
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut evaluated = 0;
    for (k, path) in paths.iter().enumerate() {
        let cutoff = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        let seg = match path_length(m, path, &cfg.budget, cutoff) {
            Ok(Some(s)) => s,
            Ok(None) => {
                evaluated += 1;
                continue;
            }
            Err(e) if k == 0 => return Err(e),
            Err(e) => {
                debug!("perturbed path {k} skipped: {e}");
                continue;
            }
        };
        evaluated += 1;
        let total: f64 = seg.iter().sum();
        if best.as_ref().map_or(true, |(b, _, _)| total < *b) {
            best = Some((total, k, seg));
        }
    }
    let (value, k, segment_values) = best.expect("base path evaluated");
    Ok(IntegratedDistanceResult {
        value,
        path: paths.swap_remove(k),
        segment_values,
        samples_per_segment: 1,
        paths_evaluated: evaluated,
    })
}
