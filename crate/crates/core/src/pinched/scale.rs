use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PinchedError;
use crate::geometry::{ChartedMetric, DeviationProfile};

/// Fraction of `r0 / 2` used when the radius constraint binds.
const R0_CAP: f64 = 1.0 - 1e-3;

/// Smallest probed scale, relative to `r0 / 2`.
const T_FLOOR: f64 = 1e-9;

const BISECTION_STEPS: usize = 60;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct T0Config {
    pub eps0: f64,
    /// Derivative order of the deviation norm (at most 3).
    pub k0: usize,
    /// Quasi-bounded-geometry radius: `h_p` is profiled on `B(0, r0)`.
    pub r0: f64,
}

impl Default for T0Config {
    fn default() -> Self {
        Self {
            eps0: 0.05,
            k0: 3,
            r0: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct T0Search {
    pub t0: f64,
    /// `max_p ||h^{t0}_p - h(p)||_{C^k0(B(0, 2))}`.
    pub deviation: f64,
    /// Whether `t0 < r0 / 2` (rather than `eps0`) determined the scale.
    pub radius_bound: bool,
    pub config: T0Config,
    pub samples: usize,
}

/// `||h^t_p - h(p)||_{C^k(B(0,2))}`: derivatives of `h^t_p(x) = h_p(t x)` of
/// order `q` are `t^q` times those of `h_p` on `B(0, 2t)`.
fn deviation(profiles: &[DeviationProfile], k0: usize, t: f64) -> f64 {
    profiles
        .iter()
        .flat_map(|pr| (0..=k0).map(move |q| t.powi(q as i32) * pr.sup_within(q, 2.0 * t)))
        .fold(0.0_f64, f64::max)
}

/// Largest `t0 < r0 / 2` with `||h^{t0}_p - h(p)||_{C^k0(B(0, 2))} < eps0` at
/// every sampled base point, by bisection on the (monotone) deviation.
pub fn find_t0(m: &ChartedMetric, p_samples: &[Vec<f64>], cfg: &T0Config) -> Result<T0Search, PinchedError> {
    if cfg.k0 > 3 {
        return Err(PinchedError::InvalidConfig(format!("k0 = {} exceeds 3", cfg.k0)));
    }
    if !(cfg.eps0 > 0.0 && cfg.r0 > 0.0) {
        return Err(PinchedError::InvalidConfig("eps0 and r0 must be positive".into()));
    }
    if p_samples.is_empty() {
        return Err(PinchedError::InvalidConfig("no base points".into()));
    }
    let profiles: Result<Vec<DeviationProfile>, _> = p_samples
        .par_iter()
        .map(|p| crate::geometry::orthonormal_profile(m, p, cfg.r0, cfg.k0))
        .collect();
    let profiles = profiles?;
    let cap = 0.5 * cfg.r0 * R0_CAP;
    let d_cap = deviation(&profiles, cfg.k0, cap);
    if d_cap < cfg.eps0 {
        return Ok(T0Search {
            t0: cap,
            deviation: d_cap,
            radius_bound: true,
            config: cfg.clone(),
            samples: p_samples.len(),
        });
    }
    let t_min = cap * T_FLOOR;
    let d_min = deviation(&profiles, cfg.k0, t_min);
    if d_min >= cfg.eps0 {
        return Err(PinchedError::NoScaleFound {
            t_min,
            deviation: d_min,
            eps0: cfg.eps0,
        });
    }
    // Geometric bisection: the answer may sit many decades below r0.
    let (mut lo, mut hi) = (t_min, cap);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if deviation(&profiles, cfg.k0, mid) < cfg.eps0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T0Search {
        t0: lo,
        deviation: deviation(&profiles, cfg.k0, lo),
        radius_bound: false,
        config: cfg.clone(),
        samples: p_samples.len(),
    })
}
