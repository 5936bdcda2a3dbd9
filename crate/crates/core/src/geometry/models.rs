//! Model manifolds used throughout the laboratory.

use std::f64::consts::TAU;
use std::sync::Arc;

use super::{ChartDomain, ChartedMetric, GeometryError, MetricField};
use crate::expr::Expr;

/// Default half-width of the Euclidean chart; large enough for affine discs
/// of radius a few hundred.
pub const EUCLIDEAN_HALF_WIDTH: f64 = 1000.0;

/// A constant metric tensor.
#[derive(Clone, Debug)]
pub struct ConstantField {
    n: usize,
    g: Vec<f64>,
}

impl ConstantField {
    pub fn new(n: usize, g: Vec<f64>) -> Self {
        assert_eq!(g.len(), n * n);
        Self { n, g }
    }

    pub fn identity(n: usize) -> Self {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = 1.0;
        }
        Self { n, g }
    }
}

impl MetricField for ConstantField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out[..self.n * self.n].copy_from_slice(&self.g);
    }

    fn eval_deriv(&self, _x: &[f64], out: &mut [f64]) -> bool {
        out[..self.n * self.n * self.n].fill(0.0);
        true
    }
}

/// `g = a / (1 - |x|^2)^2 * delta` on the unit ball: curvature `-4 / a`.
#[derive(Clone, Debug)]
pub struct ConformalBallField {
    n: usize,
    a: f64,
}

impl ConformalBallField {
    pub fn new(n: usize, a: f64) -> Self {
        Self { n, a }
    }
}

impl MetricField for ConformalBallField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let s = 1.0 - x[..n].iter().map(|v| v * v).sum::<f64>();
        let lam = self.a / (s * s);
        out[..n * n].fill(0.0);
        for i in 0..n {
            out[i * n + i] = lam;
        }
    }

    fn eval_deriv(&self, x: &[f64], out: &mut [f64]) -> bool {
        let n = self.n;
        let s = 1.0 - x[..n].iter().map(|v| v * v).sum::<f64>();
        let c = 4.0 * self.a / (s * s * s);
        out[..n * n * n].fill(0.0);
        for k in 0..n {
            for i in 0..n {
                out[k * n * n + i * n + i] = c * x[k];
            }
        }
        true
    }
}

/// Metric given componentwise by expressions; only the upper triangle is
/// read so the tensor is exactly symmetric.
#[derive(Clone, Debug)]
pub struct ExpressionField {
    n: usize,
    comps: Vec<Expr>,
}

impl ExpressionField {
    /// `comps` is row-major `n x n`; entries below the diagonal are ignored.
    pub fn new(n: usize, comps: Vec<Expr>) -> Self {
        assert_eq!(comps.len(), n * n);
        Self { n, comps }
    }
}

impl MetricField for ExpressionField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in i..n {
                let v = self.comps[i * n + j].eval(x);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
    }
}

/// `g = lambda(x) * delta` with `lambda` an expression.
#[derive(Clone, Debug)]
pub struct ConformalExprField {
    n: usize,
    factor: Expr,
}

impl ConformalExprField {
    pub fn new(n: usize, factor: Expr) -> Self {
        Self { n, factor }
    }
}

impl MetricField for ConformalExprField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let lam = self.factor.eval(x);
        out[..n * n].fill(0.0);
        for i in 0..n {
            out[i * n + i] = lam;
        }
    }
}

/// Warped product `dr^2 + f(r)^2 dtheta^2` in the chart `(r, theta)`.
#[derive(Clone, Debug)]
pub struct WarpedField {
    f: Expr,
}

impl WarpedField {
    pub fn new(f: Expr) -> Self {
        Self { f }
    }
}

impl MetricField for WarpedField {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let f = self.f.eval(x);
        out[0] = 1.0;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = f * f;
    }
}

/// Flat `R^n` on the cube of the given half-width.
pub fn euclidean(dim: usize, half_width: f64) -> ChartedMetric {
    ChartedMetric::new(
        "euclidean",
        ChartDomain::cube(dim, half_width),
        Arc::new(ConstantField::identity(dim)),
    )
}

/// The Poincaré disc `|dz|^2 / (1 - |z|^2)^2`, curvature `-4`.
pub fn poincare_disc() -> ChartedMetric {
    ChartedMetric::new(
        "poincare_disc",
        ChartDomain::ball(vec![0.0; 2], 1.0),
        Arc::new(ConformalBallField::new(2, 1.0)),
    )
}

/// The Poincaré disc restricted to `|z| < radius`.
pub fn poincare_sub_disc(radius: f64) -> ChartedMetric {
    poincare_disc().restricted(
        ChartDomain::ball(vec![0.0; 2], radius),
        format!("poincare_disc|r<{radius}"),
    )
}

/// Ball model of hyperbolic space, `4 |dx|^2 / (1 - |x|^2)^2`, curvature `-1`.
pub fn hyperbolic_ball(dim: usize) -> ChartedMetric {
    ChartedMetric::new(
        "hyperbolic_ball",
        ChartDomain::ball(vec![0.0; dim], 1.0),
        Arc::new(ConformalBallField::new(dim, 4.0)),
    )
}

/// Flat torus `R^n / (periods)`, as a single periodic chart on `[0, L_i)`.
pub fn flat_torus(periods: Vec<f64>) -> ChartedMetric {
    let dim = periods.len();
    ChartedMetric::new(
        "flat_torus",
        ChartDomain::Box {
            lo: vec![0.0; dim],
            hi: periods.clone(),
        },
        Arc::new(ConstantField::identity(dim)),
    )
    .with_periodicity(periods.into_iter().map(Some).collect())
}

/// The standard square flat torus with period `2 pi` on every axis.
pub fn standard_torus(dim: usize) -> ChartedMetric {
    flat_torus(vec![TAU; dim])
}

/// Warped product `dr^2 + f(r)^2 dtheta^2` on `r_lo < r < r_hi`, with `f`
/// an expression in `r` (alias of `x1`).
pub fn warped_product(f: &str, r_lo: f64, r_hi: f64) -> Result<ChartedMetric, GeometryError> {
    let expr = Expr::parse_with_aliases(f, 2, &[("r", 0)])?;
    if !(r_lo < r_hi) {
        return Err(GeometryError::Spec(format!("empty radial range ({r_lo}, {r_hi})")));
    }
    Ok(ChartedMetric::new(
        "warped_product",
        ChartDomain::Box {
            lo: vec![r_lo, 0.0],
            hi: vec![r_hi, TAU],
        },
        Arc::new(WarpedField::new(expr)),
    )
    .with_periodicity(vec![None, Some(TAU)]))
}

/// A constant metric on the given domain.
pub fn constant(name: &str, g: Vec<f64>, domain: ChartDomain) -> ChartedMetric {
    let n = domain.dim();
    ChartedMetric::new(name, domain, Arc::new(ConstantField::new(n, g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_ball_derivative_matches_differences() {
        for m in [poincare_disc(), hyperbolic_ball(3)] {
            let x: Vec<f64> = (0..m.dim()).map(|i| 0.1 + 0.15 * i as f64).collect();
            let d = m.derivative_discrepancy(&x).unwrap();
            assert!(d < 1e-6, "{} discrepancy {d}", m.name());
        }
    }

    #[test]
    fn expression_fields_are_exactly_symmetric() {
        let comps = ["1 + x1^2", "sin(x1*x2)", "0", "exp(x2)"]
            .iter()
            .map(|s| Expr::parse(s, 2).unwrap())
            .collect();
        let m = ChartedMetric::new(
            "expr",
            ChartDomain::cube(2, 1.0),
            Arc::new(ExpressionField::new(2, comps)),
        );
        let g = m.metric(&[0.3, 0.7]).unwrap();
        assert_eq!(g[(0, 1)], g[(1, 0)]);
        assert!((g[(0, 1)] - (0.21f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn torus_wraps_coordinates() {
        let t = standard_torus(2);
        let w = t.wrap(&[TAU + 0.5, -0.25]);
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[1] - (TAU - 0.25)).abs() < 1e-12);
        let d = t.displacement(&[0.1, 0.1], &[TAU - 0.1, 0.2]);
        assert!((d[0] + 0.2).abs() < 1e-12 && (d[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn warped_product_uses_radius_alias() {
        let m = warped_product("sinh(r)", 0.1, 3.0).unwrap();
        let g = m.metric(&[1.0, 10.0]).unwrap();
        assert!((g[(1, 1)] - 1f64.sinh().powi(2)).abs() < 1e-14);
    }
}
