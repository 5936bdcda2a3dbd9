//! Acceptance suite: criteria 1-10, run sequentially so that the measured
//! runtimes are meaningful. One line per criterion is written straight to
//! stderr (bypassing the test harness capture).

use std::io::Write;
use std::time::{Duration, Instant};

use koblab::disc::{jet_disc, DiscGrid, JetOptions};
use koblab::geometry::{curvature_bounds_scan, models, ChartedMetric};
use koblab::kobayashi::*;
use koblab::pinched::{bilipschitz_verify, find_t0, BiLipschitzConfig, T0Config};
use koblab::renormalize::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn disc_point(rng: &mut ChaCha8Rng, r: f64, dim: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-r..r)).collect();
        if p.iter().map(|x| x * x).sum::<f64>() < r * r {
            return p;
        }
    }
}

fn criterion_1() -> Outcome {
    let mut details = Vec::new();
    let cases: Vec<(ChartedMetric, f64, f64)> = vec![
        (models::poincare_disc(), -4.0, 1e-4),
        (models::hyperbolic_ball(2), -1.0, 1e-4),
        (models::hyperbolic_ball(3), -1.0, 1e-4),
        (models::euclidean(3, 2.0), 0.0, 1e-8),
        (models::standard_torus(2), 0.0, 1e-8),
    ];
    for (m, k, tol) in cases {
        let b = curvature_bounds_scan(&m, 100, 11).map_err(|e| e.to_string())?;
        let err = (b.k_min - k).abs().max((b.k_max - k).abs());
        check(err <= tol, format!("{}: K in [{}, {}], expected {k} +- {tol}", m.name(), b.k_min, b.k_max))?;
        details.push(format!("{} {:.1e}", m.name(), err));
    }
    Ok(format!("max |K - K0|: {}", details.join(", ")))
}

fn criterion_2() -> Outcome {
    let opts = JetOptions::default();
    let mut details = Vec::new();
    for (m, c, dim) in [
        (models::poincare_disc(), 4.0, 2),
        (models::hyperbolic_ball(2), 1.0, 2),
        (models::hyperbolic_ball(3), 1.0, 3),
    ] {
        certify_pinch(&m, c, 200, 5).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mut admitted, mut worst, mut attempts) = (0, 0.0_f64, 0);
        while admitted < 50 && attempts < 200 {
            attempts += 1;
            let p = disc_point(&mut rng, 0.5, dim);
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = rng.gen_range(0.05..0.3);
            let Ok(d) = jet_disc(&m, &p, &v, &w, r, &opts) else { continue };
            admitted += 1;
            let rep = schwarz_check(&d.map, c);
            worst = worst.max(rep.worst_ratio);
        }
        check(admitted >= 50, format!("{}: only {admitted} admissible discs", m.name()))?;
        check(worst <= 1.0 + 1e-2, format!("{}: Schwarz ratio {worst}", m.name()))?;
        details.push(format!("{} {admitted} discs worst {worst:.3}", m.name()));
    }
    Ok(details.join("; "))
}

fn criterion_3() -> Outcome {
    let m = models::poincare_disc();
    let b = UpperBudget::default();
    let cert = certify_pinch(&m, 4.0, 200, 1).map_err(|e| e.to_string())?;
    let lower = kobayashi_royden_lower(&m, &[0.0, 0.0], &[1.0, 0.0], &cert).map_err(|e| e.to_string())?;
    let upper = kobayashi_royden_upper(&m, &[0.0, 0.0], &[1.0, 0.0], &b).map_err(|e| e.to_string())?.upper;
    let lo = 0.5f64.sqrt() - 0.01;
    check(lower >= lo && upper <= 1.05 && lower <= upper, format!("bracket [{lower}, {upper}]"))?;
    let mut worst = 0.0_f64;
    for a in [0.5, 2.0, 3.0] {
        let v = kobayashi_royden_upper(&m, &[0.0, 0.0], &[a, 0.0], &b).map_err(|e| e.to_string())?.upper;
        let rel = (v - a * upper).abs() / (a * upper);
        worst = worst.max(rel);
    }
    check(worst <= 0.02, format!("homogeneity defect {worst}"))?;
    Ok(format!("F in [{lower:.4}, {upper:.4}], homogeneity defect {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut details = Vec::new();
    for r in [10.0, 100.0] {
        let m = models::euclidean(2, 2.0 * r);
        let b = UpperBudget {
            r_max: r,
            ..UpperBudget::default()
        };
        let u = kobayashi_royden_upper(&m, &[0.3, -0.2], &[0.0, 1.0], &b).map_err(|e| e.to_string())?.upper;
        check(u <= 1.05 / r, format!("R = {r}: F = {u}"))?;
        details.push(format!("R={r}: F*R={:.4}", u * r));
    }
    let m = models::euclidean(2, 40.0);
    let mut chain = Vec::new();
    for r in [2.0, 4.0, 8.0, 16.0] {
        let cfg = ChainConfig {
            budget: UpperBudget {
                r_max: r,
                ..UpperBudget::default()
            },
            ..ChainConfig::default()
        };
        chain.push(chain_distance(&m, &[0.0, 0.0], &[1.0, 0.0], &cfg).map_err(|e| e.to_string())?.value);
    }
    check(chain.windows(2).all(|w| w[1] < w[0]), format!("chain not decreasing: {chain:?}"))?;
    details.push(format!("chain {:?}", chain.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>()));
    Ok(details.join("; "))
}

fn criterion_5() -> Outcome {
    let m = models::poincare_disc();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut gap, mut err) = (0.0_f64, 0.0_f64);
    for _ in 0..5 {
        let p = disc_point(&mut rng, 0.6, 2);
        let q = disc_point(&mut rng, 0.6, 2);
        let exact = poincare_distance(Complex64::new(p[0], p[1]), Complex64::new(q[0], q[1])).map_err(|e| e.to_string())?;
        let c = chain_distance(&m, &p, &q, &ChainConfig::default()).map_err(|e| e.to_string())?.value;
        let i = integrated_distance(&m, &p, &q, &PathConfig::default()).map_err(|e| e.to_string())?.value;
        let g = (c - i).abs() / c.min(i);
        let e = ((c - exact).abs() / exact).max((i - exact).abs() / exact);
        check(g <= 0.15, format!("{p:?} -> {q:?}: chain {c}, integrated {i}"))?;
        check(e <= 0.10, format!("{p:?} -> {q:?}: chain {c}, integrated {i}, exact {exact}"))?;
        gap = gap.max(g);
        err = err.max(e);
    }
    Ok(format!("max chain/integrated gap {:.1}%, max error vs closed form {:.1}%", 100.0 * gap, 100.0 * err))
}

fn criterion_6() -> Outcome {
    let hb = models::hyperbolic_ball(2);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts: Vec<Vec<f64>> = (0..10).map(|_| disc_point(&mut rng, 0.5, 2)).collect();
    let cfg = T0Config::default();
    let t5 = find_t0(&hb, &pts[..5], &cfg).map_err(|e| e.to_string())?.t0;
    let t10 = find_t0(&hb, &pts, &cfg).map_err(|e| e.to_string())?.t0;
    check((t5 - t10).abs() <= 0.1 * t5, format!("t0 {t5} vs {t10}"))?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..50)
        .map(|_| (disc_point(&mut rng, 0.5, 2), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .collect();
    let bc = BiLipschitzConfig {
        tau_gap: 0.1,
        ..BiLipschitzConfig::default()
    };
    let cert = bilipschitz_verify(&hb, 1.0, t10, &rows, &bc).map_err(|e| e.to_string())?;
    check(cert.rows.len() == 50 && cert.rows.iter().all(|r| r.lower_ok && r.upper_ok), "row failure".into())?;
    Ok(format!(
        "t0 {t5:.4} (5 samples) / {t10:.4} (10 samples); 50 rows pass, C = {:.3}",
        cert.bilipschitz_constant
    ))
}

fn criterion_7() -> Outcome {
    let grid = DiscGrid::new(65).map_err(|e| e.to_string())?;
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        grid.nodes().iter().map(|&[x, y]| f((x * x + y * y).sqrt())).collect()
    };
    let eq = sibony_verify(&grid, &sample(&|r| r * r)).map_err(|e| e.to_string())?;
    check(
        eq.passes && eq.equality_everywhere && (eq.laplacian_at_origin - 4.0).abs() <= 1e-6,
        format!("|z|^2: {eq:?}"),
    )?;
    let q = sibony_verify(&grid, &sample(&|r| r.powi(4))).map_err(|e| e.to_string())?;
    check(q.passes && q.strict, format!("|z|^4: {q:?}"))?;
    let neg = sibony_verify(&grid, &sample(&|r| r)).map_err(|e| e.to_string())?;
    check(!neg.passes, "|z| was not flagged".into())?;
    Ok(format!(
        "|z|^2 Lap(0) = {:.9}, |z|^4 strict (Lap(0) = {:.1e}), |z| expected-fail (excess {:.3})",
        eq.laplacian_at_origin, q.laplacian_at_origin, neg.worst_excess
    ))
}

fn criterion_8() -> Outcome {
    let b = LogABudget::default();
    let mut details = Vec::new();
    for (m, p) in [
        (models::euclidean(2, 3.0), vec![0.0, 0.0]),
        (models::standard_torus(2), vec![1.0, 2.0]),
        (models::hyperbolic_ball(2), vec![0.1, 0.2]),
    ] {
        let r = find_log_a(&m, &p, &b).map_err(|e| format!("{}: {e}", m.name()))?;
        let hp = normal_coordinates(&m, &p, b.radius).map_err(|e| e.to_string())?;
        let discs = stress_family(&hp, 20, &b).map_err(|e| e.to_string())?;
        let a = r.a;
        let rho = move |x: &[f64]| {
            let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            s.ln() + a * s
        };
        let rep = mpsh_test(&rho, &discs, 1e-3);
        check(rep.passes && rep.discs == 20, format!("{}: {rep:?}", m.name()))?;
        details.push(format!("{} A={a} (min Lap {:.2e})", m.name(), rep.worst_laplacian));
    }
    Ok(details.join("; "))
}

fn criterion_9() -> Outcome {
    let t = models::standard_torus(2);
    let sf = SchwarzFamily::new(&t, 1.0);
    let fam = LinearFamily::complex_line(t.clone(), vec![1.0, 2.0], Complex64::new(0.8, 0.6), 16).map_err(|e| e.to_string())?;
    let k = 0.1;
    let seq = zalcman_rescale(&fam, &sf, k, &ZalcmanConfig::default()).map_err(|e| e.to_string())?;
    let norm = |z: [f64; 2]| z[0].hypot(z[1]);
    for s in &seq.steps {
        check(norm(s.t) + norm(s.kappa) < 1.0 && s.j_value >= k, format!("step {s:?}"))?;
    }
    for w in seq.steps.windows(2) {
        check(norm(w[1].kappa) < norm(w[0].kappa), "kappa_n not strictly decreasing".into())?;
        check(w[1].r_n > w[0].r_n, "R_n not strictly increasing".into())?;
    }
    let r = brody_extract(&fam, &sf, k, &BrodyConfig::default()).map_err(|e| e.to_string())?;
    check(r.verdict == BrodyVerdict::NonconstantLimit, format!("verdict {:?}: {:?}", r.verdict, r.reason))?;
    let tension = r.radii.iter().map(|c| c.tension_residual).fold(0.0, f64::max);
    check(tension <= 1e-6, format!("limit tension {tension}"))?;

    let pd = models::poincare_disc();
    let mob = MobiusFamily { target: pd.clone(), len: 16 };
    let refused = zalcman_rescale(&mob, &SchwarzFamily::new(&pd, 1.0), k, &ZalcmanConfig::default());
    check(matches!(refused, Err(RenormError::WitnessInvalid { .. })), format!("Poincare family: {refused:?}"))?;
    Ok(format!(
        "torus: kappa_16 = {:.4}, R_16 = {:.2}, NONCONSTANT_LIMIT (tension {tension:.1e}); Poincare: WitnessInvalid",
        norm(seq.steps[15].kappa),
        seq.steps[15].r_n
    ))
}

fn criterion_10() -> Outcome {
    let b = UpperBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
        .map(|_| (disc_point(&mut rng, 0.3, 2), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .collect();
    // B(0.45) in B(0.7) in the full disc.
    let chain = [models::poincare_sub_disc(0.45), models::poincare_sub_disc(0.7), models::poincare_disc()];
    let mut worst = f64::NEG_INFINITY;
    for pair in chain.windows(2) {
        let rep = decreasing_property_check(&pair[0], &pair[1], &samples, &b, 1e-12).map_err(|e| e.to_string())?;
        check(rep.passes && rep.rows.len() == 10, format!("{} in {}: {rep:?}", pair[0].name(), pair[1].name()))?;
        worst = worst.max(rep.worst_excess);
    }
    Ok(format!("2 inclusions x 10 samples, worst excess {worst:.1e}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("curvature oracles", criterion_1, 10),
        ("Schwarz bound", criterion_2, 120),
        ("Poincare bracket and homogeneity", criterion_3, 60),
        ("Euclidean degeneracy", criterion_4, 60),
        ("distance consistency", criterion_5, 300),
        ("bi-Lipschitz certificate", criterion_6, 600),
        ("Sibony lemma", criterion_7, 5),
        ("MPSH", criterion_8, 120),
        ("Brody dichotomy", criterion_9, 300),
        ("decreasing property", criterion_10, 60),
    ];
    let mut failed = Vec::new();
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = f();
        let elapsed = start.elapsed();
        if out.is_ok() && elapsed > Duration::from_secs(*limit) {
            out = Err(format!("runtime {:.1}s exceeds {limit}s", elapsed.as_secs_f64()));
        }
        let line = match &out {
            Ok(d) => format!("criterion {:>2} {name}: PASS [{:.1}s / {limit}s] {d}", i + 1, elapsed.as_secs_f64()),
            Err(e) => {
                failed.push(i + 1);
                format!("criterion {:>2} {name}: FAIL [{:.1}s / {limit}s] {e}", i + 1, elapsed.as_secs_f64())
            }
        };
        let _ = writeln!(std::io::stderr(), "{line}");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
