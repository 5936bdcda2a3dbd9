use std::ops::{Add, Div, Mul, Sub};
use std::sync::Arc;

use koblab::geometry::{
    self, christoffel, curvature_bounds_scan, curvature_report, geodesic_exp, geodesic_trajectory,
    models, pullback_exp_metric, quasi_bounded_check, rescaled_metric, sectional_curvature,
    ChartDomain, ChartedMetric, GeometryError, DEFAULT_STEPS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Forward-mode dual number, used as an independent differentiation oracle.
#[derive(Clone, Copy, Debug)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn var(v: f64) -> Self {
        Dual { v, d: 1.0 }
    }
    fn cst(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual { v: self.v / o.v, d: (self.d * o.v - self.v * o.d) / (o.v * o.v) }
    }
}

/// Conformal factor of the Poincaré disc, written generically.
fn poincare_lambda(x: Dual, y: Dual) -> Dual {
    let s = Dual::cst(1.0) - x * x - y * y;
    Dual::cst(1.0) / (s * s)
}

/// Christoffel symbols of `lambda * delta` from the dual-number gradient of
/// `lambda`: `Gamma^k_ij = (d_i l delta_jk + d_j l delta_ik - d_k l delta_ij) / (2 l)`.
fn poincare_christoffel_oracle(p: [f64; 2]) -> Vec<f64> {
    let lam = poincare_lambda(Dual::cst(p[0]), Dual::cst(p[1])).v;
    let dl = [
        poincare_lambda(Dual::var(p[0]), Dual::cst(p[1])).d,
        poincare_lambda(Dual::cst(p[0]), Dual::var(p[1])).d,
    ];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = vec![0.0; 8];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[k * 4 + i * 2 + j] =
                    (dl[i] * delta(j, k) + dl[j] * delta(i, k) - dl[k] * delta(i, j)) / (2.0 * lam);
            }
        }
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    geometry::unit_ball_sample(rng, n).into_iter().map(|v| v * radius).collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| geometry::gaussian(rng)).collect()
}

#[test]
fn christoffel_vanishes_on_flat_and_at_disc_centre() {
    let e = models::euclidean(3, 5.0);
    assert!(christoffel(&e, &[0.3, -1.0, 2.0]).unwrap().iter().all(|v| *v == 0.0));
    let p = models::poincare_disc();
    assert!(christoffel(&p, &[0.0, 0.0]).unwrap().iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn christoffel_matches_dual_number_oracle() {
    let m = models::poincare_disc();
    for p in [[0.5, 0.0], [0.2, -0.6], [-0.35, 0.41]] {
        let got = christoffel(&m, &p).unwrap();
        let want = poincare_christoffel_oracle(p);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8, "at {p:?}: {a} vs {b}");
        }
    }
    // Frozen values at (0.5, 0): d_1 phi = 4/3.
    let g = christoffel(&m, &[0.5, 0.0]).unwrap();
    assert!((g[0] - 4.0 / 3.0).abs() < 1e-8); // Gamma^1_11
    assert!((g[3] + 4.0 / 3.0).abs() < 1e-8); // Gamma^1_22
    assert!((g[5] - 4.0 / 3.0).abs() < 1e-8); // Gamma^2_12
}

#[test]
fn christoffel_errors() {
    let m = models::poincare_disc();
    assert!(matches!(christoffel(&m, &[1.2, 0.0]), Err(GeometryError::OutOfChart(_))));
    let singular = models::constant("degenerate", vec![1.0, 1.0, 1.0, 1.0], ChartDomain::cube(2, 1.0));
    assert!(matches!(christoffel(&singular, &[0.0, 0.0]), Err(GeometryError::SingularMetric(_))));
}

#[test]
fn sectional_curvature_of_models() {
    let e = models::euclidean(3, 5.0);
    let k = sectional_curvature(&e, &[0.1, 0.2, 0.3], &[1.0, 0.0, 0.0], &[0.3, 1.0, 0.5]).unwrap();
    assert!(k.abs() < 1e-8);

    let pd = models::poincare_disc();
    for x in [[0.0, 0.0], [0.5, 0.0], [-0.3, 0.6]] {
        let k = sectional_curvature(&pd, &x, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((k + 4.0).abs() < 1e-5, "K = {k} at {x:?}");
    }

    let hb = models::hyperbolic_ball(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x = random_point(&mut rng, 3, 0.7);
        let k = sectional_curvature(&hb, &x, &random_vec(&mut rng, 3), &random_vec(&mut rng, 3)).unwrap();
        assert!((k + 1.0).abs() < 1e-5, "K = {k}");
    }

    // Round sphere in stereographic coordinates: curvature +1 fixes the sign.
    let sphere = ChartedMetric::new(
        "sphere",
        ChartDomain::cube(2, 2.0),
        Arc::new(models::ConformalExprField::new(
            2,
            koblab::expr::Expr::parse("4/(1 + x1^2 + x2^2)^2", 2).unwrap(),
        )),
    );
    let k = sectional_curvature(&sphere, &[0.4, -0.3], &[1.0, 0.2], &[0.1, 1.0]).unwrap();
    assert!((k - 1.0).abs() < 1e-5, "sphere K = {k}");
}

#[test]
fn degenerate_planes_are_rejected() {
    let m = models::hyperbolic_ball(3);
    let err = sectional_curvature(&m, &[0.0; 3], &[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap_err();
    assert!(matches!(err, GeometryError::DegeneratePlane { .. }));
}

#[test]
fn riemann_symmetries_hold_on_all_models() {
    let warped = models::warped_product("sinh(r)", 0.2, 3.0).unwrap();
    let comps = ["1 + x1^2", "0.1*x1*x2", "0", "cosh(x2)"]
        .iter()
        .map(|s| koblab::expr::Expr::parse(s, 2).unwrap())
        .collect();
    let expr = ChartedMetric::new(
        "expr",
        ChartDomain::cube(2, 1.0),
        Arc::new(models::ExpressionField::new(2, comps)),
    );
    let cases: Vec<(ChartedMetric, Vec<f64>)> = vec![
        (models::euclidean(3, 2.0), vec![0.1, 0.2, 0.3]),
        (models::poincare_disc(), vec![0.3, -0.4]),
        (models::hyperbolic_ball(3), vec![0.2, 0.1, -0.3]),
        (models::standard_torus(2), vec![1.0, 5.0]),
        (warped, vec![1.1, 0.4]),
        (expr, vec![0.3, -0.2]),
    ];
    for (m, x) in cases {
        let rep = curvature_report(&m, &x).unwrap();
        assert!(rep.symmetry_defect() < 1e-6, "{}: {}", m.name(), rep.symmetry_defect());
        let n = m.dim();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(rep.christoffel[k * n * n + i * n + j], rep.christoffel[k * n * n + j * n + i]);
                }
            }
        }
    }
}

#[test]
fn warped_sinh_product_has_curvature_minus_one() {
    let m = models::warped_product("sinh(r)", 0.2, 3.0).unwrap();
    let k = sectional_curvature(&m, &[1.3, 2.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert!((k + 1.0).abs() < 1e-5, "K = {k}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sectional_curvature_is_basis_independent(
        seed in 0u64..1000,
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
    ) {
        prop_assume!((a * d - b * c).abs() > 0.1);
        let comps = ["1 + x1^2 + 0.5*x2^2", "0.2*x1*x2", "0.1*x3", "2 + sin(x2)", "0", "1 + x3^2"]
            .iter()
            .collect::<Vec<_>>();
        let full = [comps[0], comps[1], comps[2], comps[1], comps[3], comps[4], comps[2], comps[4], comps[5]];
        let exprs = full.iter().map(|s| koblab::expr::Expr::parse(s, 3).unwrap()).collect();
        let m = ChartedMetric::new("lumpy", ChartDomain::cube(3, 1.0), Arc::new(models::ExpressionField::new(3, exprs)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(&mut rng, 3, 0.5);
        let v = random_vec(&mut rng, 3);
        let w = random_vec(&mut rng, 3);
        let rep = curvature_report(&m, &x).unwrap();
        let k1 = rep.sectional(&v, &w);
        prop_assume!(k1.is_ok());
        let v2: Vec<f64> = (0..3).map(|i| a * v[i] + b * w[i]).collect();
        let w2: Vec<f64> = (0..3).map(|i| c * v[i] + d * w[i]).collect();
        let k2 = rep.sectional(&v2, &w2).unwrap();
        prop_assert!((k1.unwrap() - k2).abs() < 1e-6);
    }
}

#[test]
fn curvature_scan_brackets() {
    let hb = curvature_bounds_scan(&models::hyperbolic_ball(3), 60, 5).unwrap();
    assert!(hb.k_min > -1.0 - 1e-4 && hb.k_max < -1.0 + 1e-4, "{} {}", hb.k_min, hb.k_max);
    let torus = curvature_bounds_scan(&models::standard_torus(2), 30, 5).unwrap();
    assert!(torus.k_min.abs() < 1e-8 && torus.k_max.abs() < 1e-8);
    let e = curvature_bounds_scan(&models::euclidean(3, 10.0), 30, 5).unwrap();
    assert!(e.k_min.abs() < 1e-8 && e.k_max.abs() < 1e-8);
    // Determinism.
    let again = curvature_bounds_scan(&models::hyperbolic_ball(3), 60, 5).unwrap();
    assert_eq!(hb.k_min.to_bits(), again.k_min.to_bits());
    assert_eq!(hb.k_max.to_bits(), again.k_max.to_bits());
    assert!(curvature_bounds_scan(&models::poincare_disc(), 0, 1).is_err());
}

#[test]
fn geodesics_preserve_speed() {
    let m = models::hyperbolic_ball(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let p = random_point(&mut rng, 3, 0.5);
        let v: Vec<f64> = random_vec(&mut rng, 3).iter().map(|c| 0.3 * c).collect();
        let tr = geodesic_trajectory(&m, &p, &v, DEFAULT_STEPS).unwrap();
        let s0 = m.norm(&tr.x[0], &tr.v[0]);
        for (x, vel) in tr.x.iter().zip(&tr.v) {
            assert!((m.norm(x, vel) - s0).abs() < 1e-6 * s0.max(1.0));
        }
    }
}

#[test]
fn hyperbolic_pullback_matches_normal_form() {
    let m = models::hyperbolic_ball(2);
    let hp = pullback_exp_metric(&m, &[0.0, 0.0], 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..12 {
        let x = random_point(&mut rng, 2, 0.7);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let u = [x[0] / r, x[1] / r];
        let s = ((2.0 * r).sinh() / (2.0 * r)).powi(2);
        let h = hp.metric(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let radial = u[i] * u[j];
                let id = if i == j { 1.0 } else { 0.0 };
                let want = 4.0 * (radial + s * (id - radial));
                assert!((h[(i, j)] - want).abs() < 1e-4, "{x:?} ({i},{j}): {} vs {want}", h[(i, j)]);
            }
        }
    }
}

#[test]
fn pullback_at_origin_and_gauss_lemma() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ms = [models::hyperbolic_ball(2), models::poincare_disc(), models::hyperbolic_ball(3)];
    for m in &ms {
        for _ in 0..10 {
            let p = random_point(&mut rng, m.dim(), 0.6);
            let hp = pullback_exp_metric(m, &p, 0.8).unwrap();
            let a = hp.metric(&vec![0.0; m.dim()]).unwrap();
            let b = m.metric(&p).unwrap();
            assert!((a - &b).abs().max() < 1e-8);
            // Gauss lemma: radial vectors keep their h(p)-length.
            let dir = random_vec(&mut rng, m.dim());
            let scale = 0.5 / m.norm(&p, &dir);
            let x: Vec<f64> = dir.iter().map(|c| c * scale).collect();
            let hx = hp.metric(&x).unwrap();
            let xv = nalgebra::DVector::from_column_slice(&x);
            let lhs = (xv.transpose() * &hx * &xv)[(0, 0)];
            let rhs = (xv.transpose() * &b * &xv)[(0, 0)];
            assert!((lhs.sqrt() - rhs.sqrt()).abs() < 1e-4, "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn rescaled_metrics_shrink_towards_constant() {
    let m = models::hyperbolic_ball(2);
    let hp = pullback_exp_metric(&m, &[0.0, 0.0], 3.0).unwrap();
    let h0 = hp.metric(&[0.0, 0.0]).unwrap();
    let deviation = |t: f64| -> f64 {
        let ht = rescaled_metric(&hp, t).unwrap();
        let mut worst = 0.0_f64;
        for k in 0..24 {
            let th = k as f64 * std::f64::consts::TAU / 24.0;
            for r in [0.5, 1.0, 1.5, 2.0] {
                let g = ht.metric(&[r * th.cos(), r * th.sin()]).unwrap();
                worst = worst.max((g - &h0).abs().max());
            }
        }
        worst
    };
    let ts = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05];
    let devs: Vec<f64> = ts.iter().map(|&t| deviation(t)).collect();
    assert!(devs[4] < devs[0]);
    for w in devs.windows(2) {
        assert!(w[1] <= w[0], "{devs:?}");
    }

    let c = models::constant("c", vec![2.0, 0.5, 0.5, 1.0], ChartDomain::ball(vec![0.0; 2], 1.0));
    let ct = rescaled_metric(&c, 0.1).unwrap();
    assert_eq!(ct.metric(&[5.0, 3.0]).unwrap(), c.metric(&[0.0, 0.0]).unwrap());
}

#[test]
fn quasi_bounded_constants() {
    let e = quasi_bounded_check(&models::euclidean(2, 10.0), &[vec![0.0, 0.0], vec![1.0, -2.0]], 0.5, 3).unwrap();
    assert!(e.a_q.iter().all(|a| a.abs() < 1e-8), "{:?}", e.a_q);
    let t = quasi_bounded_check(&models::standard_torus(2), &[vec![1.0, 1.0], vec![6.0, 0.1]], 0.5, 3).unwrap();
    assert!(t.a_q.iter().all(|a| a.abs() < 1e-8), "{:?}", t.a_q);

    let m = models::hyperbolic_ball(2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut samples = vec![vec![0.0, 0.0]];
    while samples.len() < 10 {
        samples.push(random_point(&mut rng, 2, 0.7));
    }
    let rep = quasi_bounded_check(&m, &samples, 0.5, 2).unwrap();
    assert!(rep.a_q.iter().all(|a| a.is_finite()));
    for w in rep.a_q.windows(2) {
        assert!(w[0] <= w[1]);
    }
    for q in 0..=2 {
        assert!(rep.relative_spread(q) < 0.05, "q = {q}: {:?}", rep.per_sample);
    }
    // Closed-form normal metric in an orthonormal frame: the largest entry
    // of h_p - I on the radius-r0 ball is (sinh r0 / r0)^2 - 1.
    let want = (0.5f64.sinh() / 0.5).powi(2) - 1.0;
    assert!((rep.per_sample[0][0] - want).abs() < 1e-3 * want, "{} vs {want}", rep.per_sample[0][0]);
    assert!(matches!(quasi_bounded_check(&m, &samples, 0.5, 4), Err(GeometryError::DerivativeOrderTooHigh(4))));
}

#[test]
fn torus_geodesic_wraps() {
    let m = models::standard_torus(3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..6.0)).collect();
    let v = vec![13.0, -20.0, 7.5];
    let x = geodesic_exp(&m, &p, &v, DEFAULT_STEPS).unwrap();
    for i in 0..3 {
        let want = (p[i] + v[i]).rem_euclid(std::f64::consts::TAU);
        assert!((x[i] - want).abs() < 1e-12);
    }
}
