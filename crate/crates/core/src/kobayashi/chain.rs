use std::collections::HashMap;

use log::debug;
use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{admissible_disc, disc_distance_2d, KobayashiError, UpperBudget};
use crate::disc::DiscMap;
use crate::geometry::{ChartDomain, ChartedMetric};
use crate::linalg;
use crate::tolerances::TAU_LINK;

/// Point cloud and disc budget for [`chain_distance`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub budget: UpperBudget,
    /// Evenly spaced chart points inserted between `p` and `q`.
    pub interpolants: usize,
    /// Also centre a disc at the centre of the chart domain.
    pub include_chart_center: bool,
    /// Additional seeded random cloud points.
    pub extra_points: usize,
    pub seed: u64,
    /// Endpoint matching tolerance (chart units).
    pub tau_link: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            budget: UpperBudget::default(),
            interpolants: 1,
            include_chart_center: true,
            extra_points: 0,
            seed: 0,
            tau_link: TAU_LINK,
        }
    }
}

/// One link of a Kobayashi chain: disc `disc_id` maps `z` to cloud point
/// `from` and `w` to cloud point `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub disc_id: usize,
    pub from: usize,
    pub to: usize,
    pub z: [f64; 2],
    pub w: [f64; 2],
    pub rho: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainDistanceResult {
    /// Sum of the Poincaré distances along `chain`.
    pub value: f64,
    pub chain: Vec<ChainLink>,
    pub node_cloud_size: usize,
    pub discs: usize,
    pub cloud: Vec<Vec<f64>>,
}

/// Finds `z` in the disc with `u(z) = x` up to `tau_link` (Euclidean chart
/// norm of the minimal-image displacement), by Gauss-Newton on the bilinear
/// interpolant started from the nearest interior node.
pub fn locate_in_disc(u: &DiscMap, x: &[f64], tau_link: f64) -> Option<[f64; 2]> {
    let grid = u.grid();
    let target = u.target();
    let n = u.dim();
    let resid = |z: [f64; 2]| -> Option<Vec<f64>> {
        let v = u.interpolate(z[0], z[1])?;
        Some(target.displacement(x, &v))
    };
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..grid.n_interior() {
        let d = linalg::norm2(&target.displacement(x, u.value(i)));
        if d < best.0 {
            best = (d, i);
        }
    }
    let mut z = grid.node(best.1);
    let mut r = resid(z)?;
    let mut rn = linalg::norm2(&r);
    let h = grid.spacing() / 16.0;
    for _ in 0..40 {
        if rn <= 1e-3 * tau_link {
            break;
        }
        // Central-difference Jacobian of the interpolant (one-sided near the rim).
        let mut jac = vec![[0.0; 2]; n];
        for a in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[a] += h;
            zm[a] -= h;
            let (fp, fm, span) = match (resid(zp), resid(zm)) {
                (Some(fp), Some(fm)) => (fp, fm, 2.0 * h),
                (Some(fp), None) => (fp, r.clone(), h),
                (None, Some(fm)) => (r.clone(), fm, h),
                (None, None) => return None,
            };
            for k in 0..n {
                jac[k][a] = (fp[k] - fm[k]) / span;
            }
        }
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..n {
            a11 += jac[k][0] * jac[k][0];
            a12 += jac[k][0] * jac[k][1];
            a22 += jac[k][1] * jac[k][1];
            b1 -= jac[k][0] * r[k];
            b2 -= jac[k][1] * r[k];
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-300) {
            break;
        }
        let step = [(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det];
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..12 {
            let zt = [z[0] + lambda * step[0], z[1] + lambda * step[1]];
            if let Some(rt) = resid(zt) {
                let rtn = linalg::norm2(&rt);
                if rtn < rn {
                    z = zt;
                    r = rt;
                    rn = rtn;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (rn <= tau_link).then_some(z)
}

fn domain_center(d: &ChartDomain) -> Vec<f64> {
    match d {
        ChartDomain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        ChartDomain::Ball { center, .. } | ChartDomain::Ellipsoid { center, .. } => center.clone(),
    }
}

/// Second plane direction for a disc centred at `c` aimed along `v`.
fn plane_partner(m: &ChartedMetric, c: &[f64], v: &[f64], other: &[f64]) -> Vec<f64> {
    let n = m.dim();
    let vn = m.norm(c, v);
    let on = m.norm(c, other);
    if on > 0.0 && vn > 0.0 {
        let cos = m.inner(c, v, other) / (vn * on);
        if cos.abs() < 1.0 - 1e-6 {
            return other.to_vec();
        }
    }
    (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            e
        })
        .min_by(|a, b| {
            let ca = (m.inner(c, v, a) / m.norm(c, a)).abs();
            let cb = (m.inner(c, v, b) / m.norm(c, b)).abs();
            ca.total_cmp(&cb)
        })
        .expect("dimension >= 2")
}

/// Upper bound on the Kobayashi pseudodistance by Kobayashi chains.
///
/// A cloud of chart points (the endpoints, interpolants, optionally the
/// chart centre and random points) each receives the largest admissible
/// jet disc in the plane aimed at the endpoints. Every cloud point that a
/// disc reaches (located within `tau_link`) becomes a graph vertex of that
/// disc; two points `a = u(z)`, `b = u(w)` on the same disc are joined with
/// weight `rho_D(z, w)`. The shortest path from `p` to `q` is the chain.
pub fn chain_distance(
    m: &ChartedMetric,
    p: &[f64],
    q: &[f64],
    cfg: &ChainConfig,
) -> Result<ChainDistanceResult, KobayashiError> {
    m.check_point(p)?;
    m.check_point(q)?;
    let disp = m.displacement(p, q);
    let mut cloud: Vec<Vec<f64>> = vec![p.to_vec(), q.to_vec()];
    if disp.iter().all(|&d| d == 0.0) {
        return Ok(ChainDistanceResult {
            value: 0.0,
            chain: Vec::new(),
            node_cloud_size: 1,
            discs: 0,
            cloud: vec![p.to_vec()],
        });
    }
    for k in 1..=cfg.interpolants {
        let t = k as f64 / (cfg.interpolants + 1) as f64;
        let x: Vec<f64> = p.iter().zip(&disp).map(|(a, d)| a + t * d).collect();
        cloud.push(m.wrap(&x));
    }
    if cfg.include_chart_center {
        let c = domain_center(m.domain());
        if m.contains(&c) {
            cloud.push(c);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.extra_points {
        cloud.push(m.domain().sample(&mut rng, 0.9, m.periodicity()));
    }
    // Drop duplicates (keep first occurrence).
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    for x in cloud {
        if !uniq.iter().any(|y| linalg::sup_norm(&m.displacement(y, &x)) < 1e-12) {
            uniq.push(x);
        }
    }
    let cloud = uniq;

    let discs: Vec<Option<DiscMap>> = cloud
        .par_iter()
        .map(|c| {
            let to_p = m.displacement(c, p);
            let to_q = m.displacement(c, q);
            let (v, other) = if linalg::norm2(&to_p) >= linalg::norm2(&to_q) {
                (to_p, to_q)
            } else {
                (to_q, to_p)
            };
            let w = plane_partner(m, c, &v, &other);
            match admissible_disc(m, c, &v, &w, &cfg.budget) {
                Ok(Some(d)) => Some(d.jet.map),
                Ok(None) => None,
                Err(e) => {
                    debug!("no chain disc at {c:?}: {e}");
                    None
                }
            }
        })
        .collect();

    let located: Vec<Vec<(usize, [f64; 2])>> = discs
        .par_iter()
        .map(|d| match d {
            None => Vec::new(),
            Some(u) => cloud
                .iter()
                .enumerate()
                .filter_map(|(i, x)| locate_in_disc(u, x, cfg.tau_link).map(|z| (i, z)))
                .collect(),
        })
        .collect();

    let mut graph = UnGraph::<usize, f64>::new_undirected();
    let nodes: Vec<NodeIndex> = (0..cloud.len()).map(|i| graph.add_node(i)).collect();
    let mut best: HashMap<(usize, usize), ChainLink> = HashMap::new();
    for (disc_id, pts) in located.iter().enumerate() {
        for (ia, &(a, za)) in pts.iter().enumerate() {
            for &(b, zb) in &pts[ia + 1..] {
                let rho = disc_distance_2d(za, zb)?;
                let key = (a.min(b), a.max(b));
                let link = if a < b {
                    ChainLink { disc_id, from: a, to: b, z: za, w: zb, rho }
                } else {
                    ChainLink { disc_id, from: b, to: a, z: zb, w: za, rho }
                };
                match best.get(&key) {
                    Some(l) if l.rho <= rho => {}
                    _ => {
                        best.insert(key, link);
                    }
                }
            }
        }
    }
    let mut keys: Vec<&(usize, usize)> = best.keys().collect();
    keys.sort();
    for &(a, b) in keys {
        graph.add_edge(nodes[a], nodes[b], best[&(a, b)].rho);
    }
    let n_discs = discs.iter().filter(|d| d.is_some()).count();
    let (_, path) = astar(&graph, nodes[0], |n| n == nodes[1], |e| *e.weight(), |_| 0.0).ok_or(
        KobayashiError::Disconnected {
            cloud: cloud.len(),
            discs: n_discs,
        },
    )?;
    let mut chain = Vec::with_capacity(path.len().saturating_sub(1));
    for pair in path.windows(2) {
        let (a, b) = (graph[pair[0]], graph[pair[1]]);
        let link = &best[&(a.min(b), a.max(b))];
        chain.push(if link.from == a {
            link.clone()
        } else {
            ChainLink {
                disc_id: link.disc_id,
                from: a,
                to: b,
                z: link.w,
                w: link.z,
                rho: link.rho,
            }
        });
    }
    let value = chain.iter().map(|l| l.rho).sum();
    Ok(ChainDistanceResult {
        value,
        chain,
        node_cloud_size: cloud.len(),
        discs: n_discs,
        cloud,
    })
}
