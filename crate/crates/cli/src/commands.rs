use clap::{Args, Subcommand, ValueEnum};
use koblab::disc::{jet_disc, DiscError, JetOptions};
use koblab::geometry::{curvature_bounds_scan, gaussian, GeometryError};
use koblab::kobayashi::{
    certify_pinch, chain_distance, integrated_distance, kobayashi_royden_lower, kobayashi_royden_upper,
    poincare_distance, ChainConfig, KobayashiError, PathConfig, UpperBudget,
};
use koblab::pinched::{bilipschitz_verify, find_t0, BiLipschitzConfig, PinchedError, T0Config};
use koblab::renormalize::{
    brody_extract, BrodyConfig, BrodyVerdict, ConstantFamily, LinearFamily, MapFamily, MobiusFamily, RenormError,
    SchwarzFamily,
};
use koblab::tolerances::TAU_GAP;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{CliError, Context, Output};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sectional-curvature range over random points and planes.
    Curvature(CurvatureArgs),
    /// A conformal harmonic disc with prescribed centre and tangent plane.
    Disc(DiscArgs),
    /// Upper (and, given a pinch constant, lower) estimates of F(p, xi).
    Metric(MetricArgs),
    /// Chain and/or integrated pseudodistance between two points.
    Distance(DistanceArgs),
    /// Bi-Lipschitz certificate under pinched negative curvature.
    Certify(CertifyArgs),
    /// Zalcman rescaling and Brody limit of a family of discs.
    Brody(BrodyArgs),
}

/// Budgets read from the `params` block of `--config`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub upper: Option<UpperBudget>,
    pub chain: Option<ChainConfig>,
    pub path: Option<PathConfig>,
    pub t0: Option<T0Config>,
    pub bilipschitz: Option<BiLipschitzConfig>,
    pub brody: Option<BrodyConfig>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CurvatureArgs {
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DiscArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub v: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub w: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub radius: f64,
    #[arg(long, default_value_t = 65)]
    pub resolution: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct MetricArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub xi: Vec<f64>,
    /// Pinch constant `c` (`K <= -c`) for the lower estimate.
    #[arg(long)]
    pub c: Option<f64>,
    /// Largest disc radius of the search budget.
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Homogeneity sweep: also estimate F(p, a xi) for each a.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub scales: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    Chain,
    Integrated,
    Both,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DistanceArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub q: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DistanceMode::Both)]
    pub mode: DistanceMode,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CertifyArgs {
    /// Pinch constant: curvature in [-1/c, -c].
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Number of random (p, v) rows.
    #[arg(long, default_value_t = 10)]
    pub rows: usize,
    /// Base points for the t0 search.
    #[arg(long, default_value_t = 5)]
    pub pinch_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// `f_n(z) = base + n z v0` (two-dimensional charts).
    Line,
    /// Disc automorphisms into the Poincaré disc.
    Mobius,
    /// Constant maps.
    Constant,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BrodyArgs {
    /// Defaults to `mobius` on the Poincaré disc, `line` otherwise.
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    /// Constant `A` of the capped family.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Number of maps.
    #[arg(long, default_value_t = 16)]
    pub len: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.8, 0.6])]
    pub v0: Vec<f64>,
    /// Base point of the family (chart centre when absent).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub base: Vec<f64>,
}

fn geometry_error(e: GeometryError) -> CliError {
    match e {
        GeometryError::OutOfChart(_)
        | GeometryError::DimensionMismatch { .. }
        | GeometryError::DegeneratePlane { .. }
        | GeometryError::NonpositiveScale(_)
        | GeometryError::InvalidRadius(_)
        | GeometryError::DerivativeOrderTooHigh(_)
        | GeometryError::Spec(_)
        | GeometryError::Expr(_)
        | GeometryError::Json(_)
        | GeometryError::Io(_) => CliError::Config(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn disc_error(e: DiscError) -> CliError {
    match e {
        DiscError::Geometry(g) => geometry_error(g),
        DiscError::InvalidResolution(_) | DiscError::ShapeMismatch { .. } | DiscError::DegenerateInput(_) => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Numerical(e.to_string()),
    }
}

fn kobayashi_error(e: KobayashiError) -> CliError {
    match e {
        KobayashiError::PinchNotCertified { .. } => CliError::Certificate(e.to_string()),
        KobayashiError::OutsideDisc(_) | KobayashiError::ZeroVector | KobayashiError::InvalidConfig(_) => {
            CliError::Config(e.to_string())
        }
        KobayashiError::Disc(d) => disc_error(d),
        KobayashiError::Geometry(g) => geometry_error(g),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn pinched_error(e: PinchedError) -> CliError {
    match e {
        PinchedError::ClaimFailure { .. } | PinchedError::CertificateFailure { .. } => {
            CliError::Certificate(e.to_string())
        }
        PinchedError::NotOrthogonal { .. } | PinchedError::InvalidConfig(_) => CliError::Config(e.to_string()),
        PinchedError::Kobayashi(k) => kobayashi_error(k),
        PinchedError::Disc(d) => disc_error(d),
        PinchedError::Geometry(g) => geometry_error(g),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn renorm_error(e: RenormError) -> CliError {
    match e {
        RenormError::WitnessInvalid { .. } | RenormError::ExtractionFailed { .. } | RenormError::ABudgetExceeded { .. } => {
            CliError::Certificate(e.to_string())
        }
        RenormError::ChartTooSmall { .. } | RenormError::PreconditionFailed { .. } | RenormError::InvalidConfig(_) => {
            CliError::Config(e.to_string())
        }
        RenormError::Disc(d) => disc_error(d),
        RenormError::Geometry(g) => geometry_error(g),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialise")
}

fn document(ctx: &Context, command: &str, args: Value, params: Value, result: Value) -> Value {
    json!({
        "command": command,
        "version": koblab::VERSION,
        "config": {
            "spec": ctx.resolved.spec,
            "format": ctx.resolved.format,
            "seed": ctx.resolved.seed,
            "threads": ctx.resolved.threads,
            "tol_h": ctx.resolved.tol_h,
            "tol_c": ctx.resolved.tol_c,
            "args": args,
            "params": params,
        },
        "result": result,
    })
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn cols(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn nums(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:?}")).collect()
}

fn upper_budget(ctx: &Context) -> UpperBudget {
    let mut b = ctx.params.upper.clone().unwrap_or_default();
    b.seed = ctx.resolved.seed;
    b.tau_h = ctx.resolved.tol_h;
    b.tau_c = ctx.resolved.tol_c;
    b
}

pub fn dispatch(cmd: &Command, ctx: &Context) -> Result<Output, CliError> {
    match cmd {
        Command::Curvature(a) => curvature(ctx, a),
        Command::Disc(a) => disc(ctx, a),
        Command::Metric(a) => metric(ctx, a),
        Command::Distance(a) => distance(ctx, a),
        Command::Certify(a) => certify(ctx, a),
        Command::Brody(a) => brody(ctx, a),
    }
}

fn curvature(ctx: &Context, a: &CurvatureArgs) -> Result<Output, CliError> {
    let m = &ctx.manifold;
    let b = curvature_bounds_scan(m, a.samples, ctx.resolved.seed).map_err(geometry_error)?;
    let n = m.dim();
    let mut header = vec!["sample".to_string()];
    header.extend(cols("x", n));
    header.extend(cols("v", n));
    header.extend(cols("w", n));
    header.push("k".into());
    let rows: Vec<Vec<String>> = b
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = vec![i.to_string()];
            r.extend(nums(&s.point));
            r.extend(nums(&s.v));
            r.extend(nums(&s.w));
            r.push(format!("{:?}", s.k));
            r
        })
        .collect();
    Ok(Output {
        document: document(ctx, "curvature", to_value(a), Value::Null, to_value(&b)),
        csv: csv(&header, &rows),
        failure: None,
    })
}

fn disc(ctx: &Context, a: &DiscArgs) -> Result<Output, CliError> {
    let m = &ctx.manifold;
    let opts = JetOptions {
        resolution: a.resolution,
        tau_h: ctx.resolved.tol_h,
        tau_c: ctx.resolved.tol_c,
        ..JetOptions::default()
    };
    let d = jet_disc(m, &a.p, &a.v, &a.w, a.radius, &opts).map_err(disc_error)?;
    let admissible = d.report.tension_residual <= opts.tau_h && d.report.conformality_defect <= opts.tau_c;
    let n = m.dim();
    let grid = d.map.grid();
    let mut header = vec!["node".to_string(), "x".into(), "y".into()];
    header.extend(cols("u", n));
    let rows: Vec<Vec<String>> = (0..grid.n_nodes())
        .map(|i| {
            let [x, y] = grid.node(i);
            let mut r = vec![i.to_string(), format!("{x:?}"), format!("{y:?}")];
            r.extend(nums(d.map.value(i)));
            r
        })
        .collect();
    let result = json!({
        "p": a.p,
        "v_hat": d.v_hat,
        "w_hat": d.w_hat,
        "radius": d.radius,
        "drift": d.drift,
        "tau_jet": d.tau_jet,
        "admissible": admissible,
        "report": d.report,
    });
    let failure = (!admissible).then(|| CliError::Numerical("disc is not admissible".into()));
    Ok(Output {
        document: document(ctx, "disc", to_value(a), Value::Null, result),
        csv: csv(&header, &rows),
        failure,
    })
}

fn metric(ctx: &Context, a: &MetricArgs) -> Result<Output, CliError> {
    let m = &ctx.manifold;
    let mut b = upper_budget(ctx);
    if let Some(r) = a.r_max {
        b.r_max = r;
    }
    let est = kobayashi_royden_upper(m, &a.p, &a.xi, &b).map_err(kobayashi_error)?;
    let lower = match a.c {
        Some(c) => {
            let cert = certify_pinch(m, c, 200, ctx.resolved.seed).map_err(kobayashi_error)?;
            Some(kobayashi_royden_lower(m, &a.p, &a.xi, &cert).map_err(kobayashi_error)?)
        }
        None => None,
    };
    let lo = lower.unwrap_or(0.0);
    let nonempty = lo <= est.upper * (1.0 + TAU_GAP);
    let mut sweep = Vec::new();
    for &s in &a.scales {
        let xi: Vec<f64> = a.xi.iter().map(|x| s * x).collect();
        let u = kobayashi_royden_upper(m, &a.p, &xi, &b).map_err(kobayashi_error)?.upper;
        let expected = s.abs() * est.upper;
        let defect = if expected > 0.0 { (u - expected).abs() / expected } else { u.abs() };
        sweep.push(json!({ "a": s, "upper": u, "relative_defect": defect }));
    }
    let header: Vec<String> = ["quantity", "value"].iter().map(|s| s.to_string()).collect();
    let mut rows = vec![
        vec!["upper".to_string(), format!("{:?}", est.upper)],
        vec!["lower".to_string(), lower.map_or("".into(), |l| format!("{l:?}"))],
    ];
    for s in &sweep {
        rows.push(vec![format!("upper_at_{}", s["a"]), s["upper"].to_string()]);
    }
    let result = json!({
        "estimate": est,
        "lower": lower,
        "bracket": [lo, est.upper],
        "bracket_nonempty": nonempty,
        "homogeneity": sweep,
    });
    let failure = (!nonempty).then(|| CliError::Certificate(format!("empty bracket [{lo}, {}]", est.upper)));
    Ok(Output {
        document: document(ctx, "metric", to_value(a), json!({ "upper": b }), result),
        csv: csv(&header, &rows),
        failure,
    })
}

fn distance(ctx: &Context, a: &DistanceArgs) -> Result<Output, CliError> {
    let m = &ctx.manifold;
    let mut chain_cfg = ctx.params.chain.clone().unwrap_or_default();
    chain_cfg.seed = ctx.resolved.seed;
    chain_cfg.budget.tau_h = ctx.resolved.tol_h;
    chain_cfg.budget.tau_c = ctx.resolved.tol_c;
    let mut path_cfg = ctx.params.path.clone().unwrap_or_default();
    path_cfg.seed = ctx.resolved.seed;
    path_cfg.budget.tau_h = ctx.resolved.tol_h;
    path_cfg.budget.tau_c = ctx.resolved.tol_c;
    let chain = match a.mode {
        DistanceMode::Chain | DistanceMode::Both => {
            Some(chain_distance(m, &a.p, &a.q, &chain_cfg).map_err(kobayashi_error)?)
        }
        DistanceMode::Integrated => None,
    };
    let integrated = match a.mode {
        DistanceMode::Integrated | DistanceMode::Both => {
            Some(integrated_distance(m, &a.p, &a.q, &path_cfg).map_err(kobayashi_error)?)
        }
        DistanceMode::Chain => None,
    };
    let gap = match (&chain, &integrated) {
        (Some(c), Some(i)) if c.value.min(i.value) > 0.0 => Some((c.value - i.value).abs() / c.value.min(i.value)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    let closed_form = if ctx.manifold.name() == "poincare_disc" && a.p.len() == 2 && a.q.len() == 2 {
        poincare_distance(Complex64::new(a.p[0], a.p[1]), Complex64::new(a.q[0], a.q[1])).ok()
    } else {
        None
    };
    let header: Vec<String> = ["mode", "value"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    if let Some(c) = &chain {
        rows.push(vec!["chain".into(), format!("{:?}", c.value)]);
    }
    if let Some(i) = &integrated {
        rows.push(vec!["integrated".into(), format!("{:?}", i.value)]);
    }
    if let Some(e) = closed_form {
        rows.push(vec!["closed_form".into(), format!("{e:?}")]);
    }
    let params = json!({
        "chain": chain.as_ref().map(|_| &chain_cfg),
        "path": integrated.as_ref().map(|_| &path_cfg),
    });
    let result = json!({
        "chain": chain,
        "integrated": integrated,
        "relative_gap": gap,
        "closed_form": closed_form,
    });
    Ok(Output {
        document: document(ctx, "distance", to_value(a), params, result),
        csv: csv(&header, &rows),
        failure: None,
    })
}

fn certify(ctx: &Context, a: &CertifyArgs) -> Result<Output, CliError> {
    let m = &ctx.manifold;
    if a.rows == 0 || a.pinch_points == 0 {
        return Err(CliError::Config("rows and pinch_points must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.resolved.seed);
    let n = m.dim();
    let per = m.periodicity().to_vec();
    let points: Vec<Vec<f64>> = (0..a.pinch_points).map(|_| m.domain().sample(&mut rng, 0.5, &per)).collect();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..a.rows)
        .map(|_| {
            let p = m.domain().sample(&mut rng, 0.5, &per);
            let v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            (p, v)
        })
        .collect();
    let t0_cfg = ctx.params.t0.clone().unwrap_or_default();
    let mut bc = ctx.params.bilipschitz.clone().unwrap_or_default();
    bc.seed = ctx.resolved.seed;
    bc.budget.tau_h = ctx.resolved.tol_h;
    bc.budget.tau_c = ctx.resolved.tol_c;
    // Refuse early when the curvature is not pinched.
    certify_pinch(m, a.c, bc.pinch_samples, bc.seed).map_err(kobayashi_error)?;
    let t0 = find_t0(m, &points, &t0_cfg).map_err(pinched_error)?;
    let cert = bilipschitz_verify(m, a.c, t0.t0, &rows, &bc).map_err(pinched_error)?;
    let mut header: Vec<String> = vec!["row".into()];
    header.extend(cols("p", n));
    header.extend(cols("v", n));
    header.extend(["v_norm", "lower", "upper", "search_upper", "ok"].iter().map(|s| s.to_string()));
    let table: Vec<Vec<String>> = cert
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(nums(&r.p));
            row.extend(nums(&r.v));
            row.extend(nums(&[r.v_norm, r.lower, r.upper, r.search_upper]));
            row.push((r.lower_ok && r.upper_ok).to_string());
            row
        })
        .collect();
    let params = json!({ "t0": t0_cfg, "bilipschitz": bc });
    let result = json!({ "t0_search": t0, "certificate": cert });
    Ok(Output {
        document: document(ctx, "certify", to_value(a), params, result),
        csv: csv(&header, &table),
        failure: None,
    })
}

fn brody(ctx: &Context, a: &BrodyArgs) -> Result<Output, CliError> {
    let m = ctx.manifold.clone();
    let kind = a.family.unwrap_or(if m.name() == "poincare_disc" {
        FamilyKind::Mobius
    } else {
        FamilyKind::Line
    });
    let base = if a.base.is_empty() {
        vec![0.0; m.dim()]
    } else {
        a.base.clone()
    };
    m.check_point(&base).map_err(geometry_error)?;
    let family: Box<dyn MapFamily> = match kind {
        FamilyKind::Line => {
            if a.v0.len() != 2 {
                return Err(CliError::Config("--v0 takes two components".into()));
            }
            Box::new(
                LinearFamily::complex_line(m.clone(), base, Complex64::new(a.v0[0], a.v0[1]), a.len)
                    .map_err(renorm_error)?,
            )
        }
        FamilyKind::Mobius => {
            if m.dim() != 2 {
                return Err(CliError::Config("the Mobius family needs a two-dimensional chart".into()));
            }
            Box::new(MobiusFamily {
                target: m.clone(),
                len: a.len,
            })
        }
        FamilyKind::Constant => Box::new(ConstantFamily {
            target: m.clone(),
            p: base,
            len: a.len,
        }),
    };
    let sf = SchwarzFamily::new(&m, a.a);
    let cfg = ctx.params.brody.clone().unwrap_or_default();
    let report = brody_extract(family.as_ref(), &sf, a.k, &cfg).map_err(renorm_error)?;
    let header: Vec<String> = ["n", "t_re", "t_im", "kappa_re", "kappa_im", "r_n", "j_value", "b_worst_ratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .sequence
        .as_ref()
        .map(|s| {
            s.steps
                .iter()
                .map(|st| {
                    let mut r = vec![st.n.to_string()];
                    r.extend(nums(&[st.t[0], st.t[1], st.kappa[0], st.kappa[1], st.r_n, st.j_value, st.b_worst_ratio]));
                    r
                })
                .collect()
        })
        .unwrap_or_default();
    let failure = (report.verdict == BrodyVerdict::Inconclusive).then(|| {
        CliError::Certificate(format!(
            "inconclusive: {}",
            report.reason.clone().unwrap_or_default()
        ))
    });
    let mut args = to_value(a);
    args["family"] = to_value(&kind);
    Ok(Output {
        document: document(ctx, "brody", args, json!({ "brody": cfg }), to_value(&report)),
        csv: csv(&header, &rows),
        failure,
    })
}
