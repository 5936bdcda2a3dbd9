use koblab::disc::{jet_disc, DiscGrid, DiscMap, JetOptions};
use koblab::geometry::{models, ChartDomain};
use koblab::renormalize::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn budget(discs: usize) -> LogABudget {
    LogABudget {
        discs,
        ..LogABudget::default()
    }
}

#[test]
fn mpsh_test_on_model_functions() {
    let e = models::euclidean(3, 3.0);
    let opts = JetOptions {
        resolution: 17,
        ..JetOptions::default()
    };
    let discs: Vec<DiscMap> = [[0.0, 0.0, 0.0], [0.5, -0.2, 0.1]]
        .iter()
        .map(|p| jet_disc(&e, p, &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0], 0.7, &opts).unwrap().map)
        .collect();
    let linear = |x: &[f64]| 2.0 * x[0] - x[1] + 0.5 * x[2];
    let r = mpsh_test(&linear, &discs, 1e-3);
    assert!(r.passes && r.worst_laplacian.abs() < 1e-9, "{r:?}");

    let grid = DiscGrid::shared(33).unwrap();
    let id = DiscMap::from_fn(grid, models::euclidean(2, 2.0), |x, y| vec![x, y]).unwrap();
    let concave = |x: &[f64]| -(x[0] * x[0] + x[1] * x[1]);
    let r = mpsh_test(&concave, &[id.clone()], 1e-3);
    assert!(!r.passes);
    assert!((r.worst_laplacian + 4.0).abs() < 1e-9);
    let convex = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
    assert!(mpsh_test(&convex, &[id], 1e-3).passes);
}

#[test]
fn find_log_a_on_flat_and_hyperbolic_models() {
    let b = budget(20);
    let e = find_log_a(&models::euclidean(2, 3.0), &[0.0, 0.0], &b).unwrap();
    assert_eq!(e.a, b.a_min);
    assert_eq!(e.probes.len(), 1);
    let t = find_log_a(&models::standard_torus(2), &[1.0, 2.0], &b).unwrap();
    assert_eq!(t.a, e.a);

    let hb = models::hyperbolic_ball(2);
    let h20 = find_log_a(&hb, &[0.1, 0.2], &b).unwrap();
    let h40 = find_log_a(&hb, &[0.1, 0.2], &budget(40)).unwrap();
    assert!(h20.a.is_finite() && h20.a <= b.a_max);
    assert!(h40.a >= h20.a && h40.a <= 2.0 * h20.a, "{} vs {}", h20.a, h40.a);

    let impossible = LogABudget {
        a_max: 2.0,
        tau_sh: -1e6,
        discs: 4,
        ..LogABudget::default()
    };
    assert!(matches!(
        find_log_a(&models::euclidean(2, 3.0), &[0.0, 0.0], &impossible),
        Err(RenormError::ABudgetExceeded { .. })
    ));
}

#[test]
fn psi_cap_shape_and_chart_condition() {
    let e = models::euclidean(2, 5.0);
    let a = 1.5;
    let cap = psi_cap(&e, &[0.5, -0.5], a).unwrap();
    assert_eq!(cap.eval(&[0.5, -0.5]), 0.0);
    for x in [[1.5, -0.5], [0.5, 0.9], [-2.0, 1.0]] {
        assert_eq!(cap.eval(&x), a.exp());
    }
    // Psi(s) = s^2 exp(A s) inside |s| <= 1/sqrt(2).
    let s: f64 = 0.3;
    let v = cap.eval(&[0.5 + s, -0.5]);
    assert!((v - s * s * (a * s).exp()).abs() < 1e-14);

    let torus = models::standard_torus(2);
    let tc = psi_cap(&torus, &[1.0, 1.0], a).unwrap();
    // Periodic images are the same point.
    assert!(tc.eval(&[1.0 + std::f64::consts::TAU, 1.0]).abs() < 1e-12);

    assert!(matches!(
        psi_cap(&models::poincare_disc(), &[0.0, 0.0], a),
        Err(RenormError::ChartTooSmall { .. })
    ));
    assert!(matches!(psi_cap(&e, &[3.0, 0.0], a), Err(RenormError::ChartTooSmall { .. })));
    let m = models::constant("c", vec![1.0, 0.0, 0.0, 1.0], ChartDomain::ball(vec![0.0, 0.0], 3.5));
    assert!(psi_cap(&m, &[0.4, 0.0], a).is_ok());
    assert!(psi_cap(&m, &[0.6, 0.0], a).is_err());
}

proptest! {
    #[test]
    fn psi_cap_is_nonnegative_and_radially_nondecreasing(
        a in 0.0f64..5.0, dir in 0.0f64..6.28, r1 in 0.0f64..1.2, r2 in 0.0f64..1.2,
    ) {
        let e = models::euclidean(2, 5.0);
        let cap = psi_cap(&e, &[0.0, 0.0], a).unwrap();
        let at = |r: f64| cap.eval(&[r * dir.cos(), r * dir.sin()]);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(at(lo) >= 0.0);
        prop_assert!(at(lo) <= at(hi) + 1e-15);
        prop_assert!(at(hi) <= a.exp() + 1e-12);
    }
}

#[test]
fn sibony_model_cases() {
    let grid = DiscGrid::new(33).unwrap();
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        grid.nodes().iter().map(|&[x, y]| f((x * x + y * y).sqrt())).collect()
    };
    let eq = sibony_verify(&grid, &sample(&|r| r * r)).unwrap();
    assert!(eq.passes && eq.equality_everywhere && eq.laplacian_equality);
    assert!((eq.laplacian_at_origin - 4.0).abs() <= 1e-6);

    let q = sibony_verify(&grid, &sample(&|r| r.powi(4))).unwrap();
    assert!(q.passes && q.strict && !q.equality_everywhere);

    // Negative control: |z| meets the hypotheses but not the conclusions.
    let neg = sibony_verify(&grid, &sample(&|r| r)).unwrap();
    assert!(!neg.passes && neg.worst_excess > 0.1);

    let shifted = sample(&|r| 0.5 * r * r + 0.01);
    assert!(matches!(sibony_verify(&grid, &shifted), Err(RenormError::PreconditionFailed { .. })));
    let big = sample(&|r| 2.0 * r * r);
    assert!(matches!(sibony_verify(&grid, &big), Err(RenormError::PreconditionFailed { .. })));
}

#[test]
fn schwarz_family_axioms() {
    let t = models::standard_torus(2);
    let sf = SchwarzFamily::new(&t, 1.0);
    let samples = vec![vec![0.0, 0.0], vec![1.0, 5.0], vec![6.0, 3.0]];
    let ax = sf.axioms(&samples, &[0.1, 0.05, 0.01], 0);
    assert!(ax.passes && ax.diagonal_max == 0.0 && ax.monotone, "{ax:?}");
    assert!(ax.sup_by_tau[2].1 < 1.1e-4);
    assert!((sf.s(0.5) - sf.c).abs() < 1e-15);
}

fn torus_family(len: usize) -> (LinearFamily, SchwarzFamily) {
    let t = models::standard_torus(2);
    let sf = SchwarzFamily::new(&t, 1.0);
    let fam = LinearFamily::complex_line(t, vec![1.0, 2.0], Complex64::new(0.8, 0.6), len).unwrap();
    (fam, sf)
}

#[test]
fn zalcman_on_the_torus() {
    let (fam, sf) = torus_family(16);
    let k = 0.1;
    let seq = zalcman_rescale(&fam, &sf, k, &ZalcmanConfig::default()).unwrap();
    assert_eq!(seq.steps.len(), 16);
    for w in seq.steps.windows(2) {
        let k0 = w[0].kappa[0].hypot(w[0].kappa[1]);
        let k1 = w[1].kappa[0].hypot(w[1].kappa[1]);
        assert!(k1 < k0 && w[1].r_n > w[0].r_n);
    }
    for s in &seq.steps {
        assert!(s.t[0].hypot(s.t[1]) + s.kappa[0].hypot(s.kappa[1]) < 1.0);
        assert!(s.j_value >= k && s.b_worst_ratio <= 1.0);
        assert!(s.b_samples > 0);
    }
    // kappa_n = kappa_1 / n for the linear family.
    let k1 = seq.steps[0].kappa[0].hypot(seq.steps[0].kappa[1]);
    let k16 = seq.steps[15].kappa[0].hypot(seq.steps[15].kappa[1]);
    assert!((k16 * 16.0 - k1).abs() < 1e-9);

    let again = zalcman_rescale(&fam, &sf, k, &ZalcmanConfig::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&seq).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
    let json = serde_json::to_value(&seq).unwrap();
    assert!(json["steps"][0].get("r_n").is_some());
}

#[test]
fn extraction_is_refused_for_normal_families() {
    let pd = models::poincare_disc();
    let sf = SchwarzFamily::new(&pd, 1.0);
    let mob = MobiusFamily {
        target: pd.clone(),
        len: 16,
    };
    assert!(matches!(
        zalcman_rescale(&mob, &sf, 0.1, &ZalcmanConfig::default()),
        Err(RenormError::WitnessInvalid { .. })
    ));
    let r = brody_extract(&mob, &sf, 0.1, &BrodyConfig::default()).unwrap();
    assert_eq!(r.verdict, BrodyVerdict::Inconclusive);

    // A single disc repeated never concentrates.
    let grid = DiscGrid::shared(17).unwrap();
    let d = DiscMap::from_fn(grid, pd.clone(), |x, y| vec![0.5 * x, 0.5 * y]).unwrap();
    let fam = DiscFamily { maps: vec![d; 6] };
    assert!(matches!(
        zalcman_rescale(&fam, &sf, 0.1, &ZalcmanConfig::default()),
        Err(RenormError::WitnessInvalid { .. })
    ));

    // Supplied witnesses are verified.
    let (tf, tsf) = torus_family(3);
    let bad = ZalcmanConfig {
        witnesses: Some(vec![
            Witness { t: [0.0, 0.0], kappa: [0.3, 0.0] },
            Witness { t: [0.0, 0.0], kappa: [0.2, 0.0] },
            Witness { t: [0.0, 0.0], kappa: [0.001, 0.0] },
        ]),
        ..ZalcmanConfig::default()
    };
    assert!(matches!(
        zalcman_rescale(&tf, &tsf, 0.1, &bad),
        Err(RenormError::WitnessInvalid { n: 3, .. })
    ));
}

#[test]
fn brody_limits() {
    let (fam, sf) = torus_family(16);
    let r = brody_extract(&fam, &sf, 0.1, &BrodyConfig::default()).unwrap();
    assert_eq!(r.verdict, BrodyVerdict::NonconstantLimit, "{:?}", r.reason);
    assert!(r.nonconstant && r.limit_j >= 0.05);
    assert_eq!(r.radii.len(), 3);
    for rc in &r.radii {
        assert!(rc.cauchy_ok && rc.tension_residual <= 1e-6 && rc.conformal_coarse && rc.conformal_fine);
    }
    assert_eq!(r.limits.len(), 3);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["verdict"], "NONCONSTANT_LIMIT");

    let t = models::standard_torus(2);
    let c = ConstantFamily {
        target: t,
        p: vec![1.0, 1.0],
        len: 16,
    };
    let r = brody_extract(&c, &sf, 0.1, &BrodyConfig::default()).unwrap();
    assert_eq!(r.verdict, BrodyVerdict::Inconclusive);
    assert!(r.sequence.is_none());
}
