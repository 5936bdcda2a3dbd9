use koblab::disc::{jet_disc, DiscGrid, DiscMap, JetOptions};
use koblab::geometry::{models, ChartDomain};
use koblab::kobayashi::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_disc_point(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    loop {
        let z = c(rng.gen_range(-r..r), rng.gen_range(-r..r));
        if z.norm() < r {
            return z;
        }
    }
}

#[test]
fn poincare_formulas() {
    assert_eq!(poincare_metric(c(0.0, 0.0), c(1.0, 0.0)).unwrap(), 1.0);
    assert!((poincare_metric(c(0.5, 0.0), c(1.0, 0.0)).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(poincare_distance(c(0.3, -0.2), c(0.3, -0.2)).unwrap(), 0.0);
    assert!((poincare_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
    assert!(matches!(poincare_metric(c(1.0, 0.0), c(1.0, 0.0)), Err(KobayashiError::OutsideDisc(_))));
    assert!(matches!(poincare_distance(c(0.0, 0.0), c(0.0, -1.2)), Err(KobayashiError::OutsideDisc(_))));
}

#[test]
fn poincare_distance_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let a = random_disc_point(&mut rng, 0.999);
        let b = random_disc_point(&mut rng, 0.999);
        let z = random_disc_point(&mut rng, 0.999);
        let ab = poincare_distance(a, b).unwrap();
        let az = poincare_distance(a, z).unwrap();
        let zb = poincare_distance(z, b).unwrap();
        assert!(ab <= az + zb + 1e-12, "{ab} > {az} + {zb}");
    }
}

proptest! {
    #[test]
    fn poincare_metric_is_homogeneous(x in -0.6..0.6f64, y in -0.6..0.6f64, vx in -3.0..3.0f64, vy in -3.0..3.0f64) {
        let p1 = poincare_metric(c(x, y), c(vx, vy)).unwrap();
        let p2 = poincare_metric(c(x, y), c(2.0 * vx, 2.0 * vy)).unwrap();
        prop_assert!((p2 - 2.0 * p1).abs() <= 1e-14 * p1.max(1.0));
    }

    #[test]
    fn poincare_distance_is_symmetric(x in -0.7..0.7f64, y in -0.7..0.7f64, u in -0.7..0.7f64, v in -0.7..0.7f64) {
        let d1 = poincare_distance(c(x, y), c(u, v)).unwrap();
        let d2 = poincare_distance(c(u, v), c(x, y)).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-14 * d1.max(1.0));
        prop_assert_eq!(d1 == 0.0, x == u && y == v);
    }
}

#[test]
fn poincare_bracket_at_origin() {
    let m = models::poincare_disc();
    let est = kobayashi_royden_upper(&m, &[0.0, 0.0], &[1.0, 0.0], &UpperBudget::default()).unwrap();
    let cert = certify_pinch(&m, 4.0, 200, 1).unwrap();
    let lower = kobayashi_royden_lower(&m, &[0.0, 0.0], &[1.0, 0.0], &cert).unwrap();
    assert!((lower - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(est.upper <= 1.05, "upper {}", est.upper);
    assert!(lower <= est.upper + koblab::tolerances::TAU_GAP);
    let c = est.certificate.as_ref().unwrap();
    assert!(c.conformality_defect <= est.tolerances.tau_c);
    assert!(c.tension_residual <= est.tolerances.tau_h);
    assert!((est.upper - 1.0 / c.r_prime).abs() < 1e-15);
    assert!(est.disc.is_some());
}

#[test]
fn upper_is_homogeneous() {
    let m = models::poincare_disc();
    let b = UpperBudget::default();
    let p = [0.2, -0.1];
    let xi = [1.0, 0.5];
    let base = kobayashi_royden_upper(&m, &p, &xi, &b).unwrap().upper;
    for a in [-2.0, -1.0, 0.5, 2.0, 3.0] {
        let axi = [a * xi[0], a * xi[1]];
        let val = kobayashi_royden_upper(&m, &p, &axi, &b).unwrap().upper;
        let f: f64 = a;
        assert!((val - f.abs() * base).abs() <= 0.02 * f.abs() * base, "a = {a}: {val} vs {}", f.abs() * base);
    }
}

#[test]
fn zero_vector_rejected() {
    let m = models::poincare_disc();
    let r = kobayashi_royden_upper(&m, &[0.0, 0.0], &[0.0, 0.0], &UpperBudget::default());
    assert!(matches!(r, Err(KobayashiError::ZeroVector)));
}

#[test]
fn euclidean_upper_degenerates() {
    for r in [10.0, 100.0] {
        let m = models::euclidean(3, 2.0 * r);
        let b = UpperBudget {
            r_max: r,
            resolution: 33,
            ..UpperBudget::default()
        };
        let est = kobayashi_royden_upper(&m, &[0.3, -0.2, 0.1], &[0.0, 1.0, 0.0], &b).unwrap();
        assert!(est.upper <= 1.05 / r, "R = {r}: {}", est.upper);
    }
}

#[test]
fn lower_bound_values() {
    let pd = models::poincare_disc();
    let cert = certify_pinch(&pd, 4.0, 200, 3).unwrap();
    assert!((kobayashi_royden_lower(&pd, &[0.0, 0.0], &[1.0, 0.0], &cert).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(kobayashi_royden_lower(&pd, &[0.3, 0.1], &[0.0, 0.0], &cert).unwrap(), 0.0);

    let hb = models::hyperbolic_ball(3);
    let cert = certify_pinch(&hb, 1.0, 200, 3).unwrap();
    // |xi|_g = 1 at the origin needs |xi| = 1/2.
    let v = kobayashi_royden_lower(&hb, &[0.0; 3], &[0.5, 0.0, 0.0], &cert).unwrap();
    assert!((v - (1.0f64 / 8.0).sqrt()).abs() < 1e-12);

    let e = models::euclidean(2, 1.0);
    assert!(matches!(certify_pinch(&e, 1.0, 50, 0), Err(KobayashiError::PinchNotCertified { .. })));
    // A pinch constant larger than the true one is refused.
    assert!(matches!(certify_pinch(&hb, 1.5, 100, 0), Err(KobayashiError::PinchNotCertified { .. })));
}

#[test]
fn schwarz_ratios() {
    let m = models::poincare_disc();
    let grid = DiscGrid::shared(33).unwrap();
    // Identity disc (scaled by 1 - 1e-9 so the rim stays in the open chart).
    let s = 1.0 - 1e-9;
    let id = DiscMap::from_fn(grid.clone(), m.clone(), |x, y| vec![s * x, s * y]).unwrap();
    let rep = schwarz_check(&id, 4.0);
    assert!((rep.worst_ratio - 0.5).abs() < 1e-6, "{}", rep.worst_ratio);
    assert!(rep.passes);

    let k = DiscMap::constant(grid, m, &[0.2, 0.3]).unwrap();
    let rep = schwarz_check(&k, 4.0);
    assert_eq!(rep.worst_ratio, 0.0);

    let hb = models::hyperbolic_ball(3);
    let j = jet_disc(&hb, &[0.1, 0.0, -0.2], &[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0], 0.2, &JetOptions::default()).unwrap();
    let rep = schwarz_check(&j.map, 1.0);
    assert!(rep.passes && rep.worst_ratio <= 1.0 + 1e-2, "{}", rep.worst_ratio);
}

#[test]
fn chain_trivial_and_invariants() {
    let m = models::poincare_disc();
    let cfg = ChainConfig::default();
    let r = chain_distance(&m, &[0.1, 0.2], &[0.1, 0.2], &cfg).unwrap();
    assert_eq!(r.value, 0.0);
    assert!(r.chain.is_empty());

    let p = [-0.2, 0.1];
    let q = [0.3, 0.2];
    let fwd = chain_distance(&m, &p, &q, &cfg).unwrap();
    let sum: f64 = fwd.chain.iter().map(|l| l.rho).sum();
    assert_eq!(fwd.value, sum);
    for l in &fwd.chain {
        assert_eq!(l.rho, disc_distance_2d(l.z, l.w).unwrap());
    }
    assert_eq!(fwd.chain.first().unwrap().from, 0);
    assert_eq!(fwd.chain.last().unwrap().to, 1);
    for w in fwd.chain.windows(2) {
        assert_eq!(w[0].to, w[1].from);
    }
    let bwd = chain_distance(&m, &q, &p, &cfg).unwrap();
    assert!((fwd.value - bwd.value).abs() <= 0.05 * fwd.value);
    let exact = poincare_distance(c(p[0], p[1]), c(q[0], q[1])).unwrap();
    assert!((fwd.value - exact).abs() <= 0.1 * exact, "{} vs {exact}", fwd.value);
}

#[test]
fn chain_decreases_with_euclidean_budget() {
    let m = models::euclidean(2, 40.0);
    let mut last = f64::INFINITY;
    for r in [2.0, 4.0, 8.0, 16.0] {
        let cfg = ChainConfig {
            budget: UpperBudget {
                r_max: r,
                resolution: 33,
                ..UpperBudget::default()
            },
            ..ChainConfig::default()
        };
        let d = chain_distance(&m, &[0.0, 0.0], &[1.0, 0.0], &cfg).unwrap().value;
        assert!(d < last, "R = {r}: {d} !< {last}");
        last = d;
    }
    assert!(last < 0.1);
}

#[test]
fn chain_reports_disconnection() {
    // Discs of radius 0.05 cannot reach a point at distance 1.
    let m = models::euclidean(2, 4.0);
    let cfg = ChainConfig {
        budget: UpperBudget {
            r_max: 0.05,
            max_radii: 2,
            resolution: 17,
            ..UpperBudget::default()
        },
        include_chart_center: false,
        interpolants: 0,
        ..ChainConfig::default()
    };
    let r = chain_distance(&m, &[0.0, 0.0], &[1.0, 0.0], &cfg);
    assert!(matches!(r, Err(KobayashiError::Disconnected { .. })), "{r:?}");
}

#[test]
fn locate_recovers_disc_parameters() {
    let m = models::poincare_disc();
    let grid = DiscGrid::shared(33).unwrap();
    let u = DiscMap::from_fn(grid, m, |x, y| vec![0.5 * x - 0.1 * y, 0.1 * x + 0.5 * y]).unwrap();
    let z = locate_in_disc(&u, &[0.2, 0.15], 1e-3).unwrap();
    let img = u.interpolate(z[0], z[1]).unwrap();
    assert!((img[0] - 0.2).abs() < 1e-9 && (img[1] - 0.15).abs() < 1e-9);
    assert!(locate_in_disc(&u, &[0.9, 0.0], 1e-3).is_none());
}

#[test]
fn integrated_distance_basics() {
    let m = models::poincare_disc();
    let cfg = PathConfig {
        perturbations: 2,
        ..PathConfig::default()
    };
    let r = integrated_distance(&m, &[0.2, 0.0], &[0.2, 0.0], &cfg).unwrap();
    assert_eq!(r.value, 0.0);

    let r = integrated_distance(&m, &[0.0, 0.0], &[0.3, 0.0], &cfg).unwrap();
    assert_eq!(r.value, r.segment_values.iter().sum::<f64>());
    assert_eq!(r.path.len(), cfg.segments + 1);
    let exact = poincare_distance(c(0.0, 0.0), c(0.3, 0.0)).unwrap();
    assert!((r.value - exact).abs() <= 0.1 * exact, "{} vs {exact}", r.value);
    assert!(r.value >= exact * (1.0 - 0.01));
}

#[test]
fn decreasing_property() {
    let b = UpperBudget::default();
    let full = models::poincare_disc();
    let samples = vec![(vec![0.0, 0.0], vec![1.0, 0.0]), (vec![0.1, -0.1], vec![0.3, 1.0])];

    let same = decreasing_property_check(&full, &full, &samples, &b, 1e-12).unwrap();
    assert!(same.passes);
    for row in &same.rows {
        assert_eq!(row.ambient_search, row.sub_upper);
    }

    let half = models::poincare_sub_disc(0.5);
    let rep = decreasing_property_check(&half, &full, &samples, &b, 1e-12).unwrap();
    assert!(rep.passes, "{rep:?}");
    for row in &rep.rows {
        assert!(row.nested_disc_admitted);
        assert!(row.ambient_search <= row.sub_upper, "{row:?}");
    }

    let amb = models::euclidean(2, 20.0);
    let sub = amb.restricted(ChartDomain::ball(vec![0.0, 0.0], 2.0), "euclidean|ball");
    let eb = UpperBudget {
        resolution: 33,
        ..UpperBudget::default()
    };
    let rep = decreasing_property_check(&sub, &amb, &samples, &eb, 1e-12).unwrap();
    assert!(rep.passes);
    for row in &rep.rows {
        assert!(row.ambient_search < 0.5 * row.sub_upper, "{row:?}");
    }

    let other = models::hyperbolic_ball(2);
    assert!(decreasing_property_check(&other, &full, &samples, &b, 1e-12).is_err());
}

#[test]
fn hyperbolicity_at_points() {
    let pd = models::poincare_disc();
    match hyperbolic_at_point(&pd, &[0.3, 0.3], Some(4.0), 200, 0).unwrap() {
        Hyperbolicity::Hyperbolic { constant, .. } => assert!((constant - 0.5f64.sqrt()).abs() < 1e-12),
        h => panic!("{h:?}"),
    }
    let e = models::euclidean(3, 1.0);
    assert!(matches!(
        hyperbolic_at_point(&e, &[0.0; 3], None, 100, 0).unwrap(),
        Hyperbolicity::Unknown { .. }
    ));
    match hyperbolic_at_point(&models::hyperbolic_ball(3), &[0.1, 0.0, 0.2], Some(1.0), 200, 0).unwrap() {
        Hyperbolicity::Hyperbolic { constant, .. } => assert!((constant - (1.0f64 / 8.0).sqrt()).abs() < 1e-12),
        h => panic!("{h:?}"),
    }
    // Without a declared constant the scan's own bound is used.
    match hyperbolic_at_point(&models::hyperbolic_ball(2), &[0.0, 0.0], None, 200, 0).unwrap() {
        Hyperbolicity::Hyperbolic { c, .. } => assert!((c - 1.0).abs() < 1e-3),
        h => panic!("{h:?}"),
    }
}

#[test]
fn local_boundedness_is_stable() {
    let m = models::poincare_disc();
    let b = UpperBudget {
        resolution: 41,
        ..UpperBudget::default()
    };
    let worst = |count: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ck: f64 = 0.0;
        for _ in 0..count {
            let p = [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)];
            let xi = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let f = kobayashi_royden_upper(&m, &p, &xi, &b).unwrap().upper;
            ck = ck.max(f / m.norm(&p, &xi));
        }
        ck
    };
    let c4 = worst(4);
    let c8 = worst(8);
    assert!(c4.is_finite() && c8.is_finite());
    assert!((c8 - c4).abs() <= 0.2 * c4, "{c4} vs {c8}");
}
