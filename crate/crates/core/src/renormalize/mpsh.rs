use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RenormError;
use crate::disc::{jet_disc, DiscMap, JetOptions};
use crate::geometry::{gaussian, pullback_with, unit_sphere_sample, ChartedMetric, Frame, PullbackOptions, TabulatedMetric};
use crate::linalg;
use crate::tolerances::TAU_SH;

/// Outcome of [`mpsh_test`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpshReport {
    pub passes: bool,
    pub discs: usize,
    /// Disc and interior node realising the smallest discrete Laplacian.
    pub worst_disc: usize,
    pub worst_node: usize,
    pub worst_laplacian: f64,
}

/// Discrete sub-mean-value test of `rho` along every disc: at each interior
/// node the Shortley-Weller Laplacian of `rho o u` (which is `4/h^2` times
/// the four-neighbour average minus the centre away from the rim) must be
/// at least `-tau_sh`.
///
/// Nodes where `rho o u = -inf` pass vacuously; a node with a `-inf`
/// neighbour but finite centre fails.
pub fn mpsh_test(rho: &(dyn Fn(&[f64]) -> f64 + Sync), discs: &[DiscMap], tau_sh: f64) -> MpshReport {
    let per_disc: Vec<(usize, f64)> = discs
        .par_iter()
        .map(|u| {
            let grid = u.grid();
            let vals: Vec<f64> = (0..grid.n_nodes()).map(|i| rho(u.value(i))).collect();
            let mut worst = (0, f64::INFINITY);
            for i in 0..grid.n_interior() {
                let c = vals[i];
                if c == f64::NEG_INFINITY {
                    continue;
                }
                let w = grid.laplacian_weights(i);
                let lap: f64 = grid.neighbors(i).iter().zip(w).map(|(&(k, _), wt)| wt * (vals[k] - c)).sum();
                let lap = if lap.is_nan() { f64::NEG_INFINITY } else { lap };
                if lap < worst.1 {
                    worst = (i, lap);
                }
            }
            worst
        })
        .collect();
    let mut rep = MpshReport {
        passes: true,
        discs: discs.len(),
        worst_disc: 0,
        worst_node: 0,
        worst_laplacian: f64::INFINITY,
    };
    for (d, &(node, lap)) in per_disc.iter().enumerate() {
        if lap < rep.worst_laplacian {
            rep.worst_disc = d;
            rep.worst_node = node;
            rep.worst_laplacian = lap;
        }
    }
    rep.passes = !(rep.worst_laplacian < -tau_sh);
    rep
}

/// Budget for [`find_log_a`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogABudget {
    /// Number of discs in the stress family.
    pub discs: usize,
    pub seed: u64,
    /// Radius of the normal-coordinate neighbourhood the discs live in.
    pub radius: f64,
    pub resolution: usize,
    /// First probe; probes double up to `a_max`.
    pub a_min: f64,
    pub a_max: f64,
    pub tau_sh: f64,
}

impl Default for LogABudget {
    fn default() -> Self {
        Self {
            discs: 20,
            seed: 0,
            radius: 0.5,
            resolution: 33,
            a_min: 0.5,
            a_max: 4096.0,
            tau_sh: TAU_SH,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogAResult {
    pub a: f64,
    /// `(A, passes, worst Laplacian)` for every probe tried.
    pub probes: Vec<(f64, bool, f64)>,
    pub discs: usize,
    pub budget: LogABudget,
}

/// Tabulated normal coordinates `h_p` (orthonormal frame) on the ball of
/// the given radius about the origin.
pub fn normal_coordinates(m: &ChartedMetric, p: &[f64], radius: f64) -> Result<ChartedMetric, RenormError> {
    let n = m.dim();
    let spacing = radius / 16.0;
    let reach = radius + 2.0 * (n as f64).sqrt() * spacing * 1.01;
    let opts = PullbackOptions {
        frame: Frame::Orthonormal,
        ..PullbackOptions::default()
    };
    let hp = pullback_with(m, p, reach, &opts)?;
    Ok(TabulatedMetric::sample(&hp, radius, spacing)?)
}

/// Jet discs in normal coordinates `hp` passing near, but not through, the
/// origin: centre at distance `d` in `[0.3, 0.8] * radius / 1.2` along a
/// random direction, random tangent plane, radius `0.4 d`. The family is
/// nested in `count` (the first `k` discs do not depend on `count`).
pub fn stress_family(hp: &ChartedMetric, count: usize, budget: &LogABudget) -> Result<Vec<DiscMap>, RenormError> {
    let n = hp.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let specs: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = (0..count)
        .map(|_| {
            let dir = unit_sphere_sample(&mut rng, n);
            let d = budget.radius / 1.2 * rng.gen_range(0.3..0.8);
            let q: Vec<f64> = dir.iter().map(|x| d * x).collect();
            let v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            let w: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            (q, v, w, 0.4 * d)
        })
        .collect();
    let opts = JetOptions {
        resolution: budget.resolution,
        ..JetOptions::default()
    };
    specs
        .par_iter()
        .map(|(q, v, w, r)| Ok(jet_disc(hp, q, v, w, *r, &opts)?.map))
        .collect()
}

/// Smallest `A` in the doubling sequence `a_min, 2 a_min, ...` for which
/// `log|x| + A|x|` (normal coordinates at `p`) passes [`mpsh_test`] on the
/// stress family.
pub fn find_log_a(m: &ChartedMetric, p: &[f64], budget: &LogABudget) -> Result<LogAResult, RenormError> {
    m.check_point(p)?;
    if !(budget.a_min > 0.0 && budget.a_max >= budget.a_min) || budget.discs == 0 {
        return Err(RenormError::InvalidConfig(
            "need 0 < a_min <= a_max and at least one disc".into(),
        ));
    }
    let hp = normal_coordinates(m, p, budget.radius)?;
    let discs = stress_family(&hp, budget.discs, budget)?;
    let mut probes = Vec::new();
    let mut a = budget.a_min;
    let mut worst = f64::NEG_INFINITY;
    while a <= budget.a_max {
        let rho = move |x: &[f64]| {
            let r = linalg::norm2(x);
            r.ln() + a * r
        };
        let rep = mpsh_test(&rho, &discs, budget.tau_sh);
        probes.push((a, rep.passes, rep.worst_laplacian));
        worst = rep.worst_laplacian;
        if rep.passes {
            return Ok(LogAResult {
                a,
                probes,
                discs: discs.len(),
                budget: budget.clone(),
            });
        }
        a *= 2.0;
    }
    Err(RenormError::ABudgetExceeded {
        a_max: budget.a_max,
        worst,
    })
}
