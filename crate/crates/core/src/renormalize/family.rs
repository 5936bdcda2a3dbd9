use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::psi::{psi, PsiCap};
use super::RenormError;
use crate::disc::DiscMap;
use crate::geometry::{unit_sphere_sample, ChartedMetric};

/// The family `J_eta(eta~) = Psi_eta(eta~)` with its Schwarz data
/// `(alpha-, alpha+, c, s)`.
///
/// If `sup_{alpha+ D} J_{f(t0)}(f(t0 + kappa t)) <= c` for a conformal
/// harmonic `f`, Sibony's lemma applied to `J / c` on `alpha+ D` gives
/// `J <= (c / alpha+^2) |t|^2`, hence the gauge `s(tau) = C_s tau^2` with
/// `C_s = c / alpha+^2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchwarzFamily {
    pub a: f64,
    /// Unit of chart length used by `Psi`.
    pub scale: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub c: f64,
    pub periodicity: Vec<Option<f64>>,
}

/// Measured axioms of a [`SchwarzFamily`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchwarzAxioms {
    /// `max J_eta(eta)` over the samples (axiom (i): zero).
    pub diagonal_max: f64,
    /// `(tau, sup_{d <= tau} J)` on the tau grid (axiom (ii)).
    pub sup_by_tau: Vec<(f64, f64)>,
    pub monotone: bool,
    pub passes: bool,
}

impl SchwarzFamily {
    /// `alpha- = 1/4`, `alpha+ = 1/2`, `c = 1/4`: `J <= c` keeps the image in
    /// the uncapped region `|x - x(q)| <= 1/2`.
    pub fn new(m: &ChartedMetric, a: f64) -> Self {
        Self {
            a,
            scale: 1.0,
            alpha_minus: 0.25,
            alpha_plus: 0.5,
            c: 0.25,
            periodicity: m.periodicity().to_vec(),
        }
    }

    pub fn cap(&self, eta: &[f64]) -> PsiCap {
        PsiCap {
            center: eta.to_vec(),
            a: self.a,
            scale: self.scale,
            periodicity: self.periodicity.clone(),
        }
    }

    /// `J_eta(eta~)`.
    pub fn j(&self, eta: &[f64], eta_t: &[f64]) -> f64 {
        let s = super::psi::distance(&self.periodicity, eta, eta_t) / self.scale;
        psi(s * s) * (self.a * psi(s)).exp()
    }

    /// Gauge `s(tau) = (c / alpha+^2) tau^2`.
    pub fn s(&self, tau: f64) -> f64 {
        self.c / (self.alpha_plus * self.alpha_plus) * tau * tau
    }

    /// Checks `J_eta(eta) = 0` and that `sup_{d(eta, eta~) <= tau} J`
    /// decreases along `taus` (expected `[0.1, 0.05, 0.01]`), sampling 16
    /// directions per base point. `J` is radial and increasing in the
    /// distance, so the supremum is attained on the sphere.
    pub fn axioms(&self, samples: &[Vec<f64>], taus: &[f64], seed: u64) -> SchwarzAxioms {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut diagonal_max = 0.0_f64;
        let mut sups = vec![0.0_f64; taus.len()];
        for eta in samples {
            diagonal_max = diagonal_max.max(self.j(eta, eta));
            for _ in 0..16 {
                let dir = unit_sphere_sample(&mut rng, eta.len());
                for (k, &tau) in taus.iter().enumerate() {
                    let et: Vec<f64> = eta.iter().zip(&dir).map(|(x, d)| x + tau * d).collect();
                    sups[k] = sups[k].max(self.j(eta, &et));
                }
            }
        }
        let monotone = sups.windows(2).all(|w| w[1] < w[0]);
        SchwarzAxioms {
            diagonal_max,
            sup_by_tau: taus.iter().copied().zip(sups).collect(),
            monotone,
            passes: diagonal_max == 0.0 && monotone,
        }
    }
}

/// An indexed sequence `f_1, f_2, ...` of maps from the unit disc.
pub trait MapFamily: Sync {
    fn target(&self) -> &ChartedMetric;
    /// Number of maps (`n` runs over `1..=len`).
    fn len(&self) -> usize;
    /// `f_n(t)` in lifted chart coordinates, `|t| < 1`.
    fn eval(&self, n: usize, t: Complex64) -> Vec<f64>;
    fn name(&self) -> String;
}

/// `f_n(x + iy) = base + n (x a + y b)`; conformal when `a` and `b` are
/// orthogonal of equal length. On a flat torus this is the projection of
/// the complex line `n z v0`.
#[derive(Clone, Debug)]
pub struct LinearFamily {
    pub target: ChartedMetric,
    pub base: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub len: usize,
}

impl LinearFamily {
    /// `f_n(z) = base + n z v0` on a two-dimensional chart (`z v0` as a
    /// complex product).
    pub fn complex_line(target: ChartedMetric, base: Vec<f64>, v0: Complex64, len: usize) -> Result<Self, RenormError> {
        if target.dim() != 2 {
            return Err(RenormError::InvalidConfig("complex lines need a two-dimensional chart".into()));
        }
        Ok(Self {
            target,
            base,
            a: vec![v0.re, v0.im],
            b: vec![-v0.im, v0.re],
            len,
        })
    }
}

impl MapFamily for LinearFamily {
    fn target(&self) -> &ChartedMetric {
        &self.target
    }
    fn len(&self) -> usize {
        self.len
    }
    fn eval(&self, n: usize, t: Complex64) -> Vec<f64> {
        let k = n as f64;
        (0..self.base.len())
            .map(|i| self.base[i] + k * (t.re * self.a[i] + t.im * self.b[i]))
            .collect()
    }
    fn name(&self) -> String {
        format!("linear:{}", self.target.name())
    }
}

/// Disc automorphisms `f_n(z) = (z + a_n) / (1 + a_n z)`, `a_n = n/(n+1)`,
/// into the Poincaré disc chart: the derivative blows up near `-a_n`, yet
/// the family is normal.
#[derive(Clone, Debug)]
pub struct MobiusFamily {
    pub target: ChartedMetric,
    pub len: usize,
}

impl MapFamily for MobiusFamily {
    fn target(&self) -> &ChartedMetric {
        &self.target
    }
    fn len(&self) -> usize {
        self.len
    }
    fn eval(&self, n: usize, t: Complex64) -> Vec<f64> {
        let a = n as f64 / (n as f64 + 1.0);
        let w = (t + a) / (1.0 + a * t);
        vec![w.re, w.im]
    }
    fn name(&self) -> String {
        format!("mobius:{}", self.target.name())
    }
}

/// Every map constant at `p`.
#[derive(Clone, Debug)]
pub struct ConstantFamily {
    pub target: ChartedMetric,
    pub p: Vec<f64>,
    pub len: usize,
}

impl MapFamily for ConstantFamily {
    fn target(&self) -> &ChartedMetric {
        &self.target
    }
    fn len(&self) -> usize {
        self.len
    }
    fn eval(&self, _n: usize, _t: Complex64) -> Vec<f64> {
        self.p.clone()
    }
    fn name(&self) -> String {
        format!("constant:{}", self.target.name())
    }
}

/// Solved discs, evaluated by bilinear interpolation (nearest node near the
/// rim where no full lattice cell exists).
#[derive(Clone, Debug)]
pub struct DiscFamily {
    pub maps: Vec<DiscMap>,
}

impl MapFamily for DiscFamily {
    fn target(&self) -> &ChartedMetric {
        self.maps[0].target()
    }
    fn len(&self) -> usize {
        self.maps.len()
    }
    fn eval(&self, n: usize, t: Complex64) -> Vec<f64> {
        let u = &self.maps[n - 1];
        u.interpolate(t.re, t.im).unwrap_or_else(|| {
            let grid = u.grid();
            let nearest = (0..grid.n_nodes())
                .min_by(|&a, &b| {
                    let da = (grid.node(a)[0] - t.re).hypot(grid.node(a)[1] - t.im);
                    let db = (grid.node(b)[0] - t.re).hypot(grid.node(b)[1] - t.im);
                    da.total_cmp(&db)
                })
                .unwrap_or(0);
            u.value(nearest).to_vec()
        })
    }
    fn name(&self) -> String {
        "discs".into()
    }
}
