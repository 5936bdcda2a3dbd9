//! `koblab`: run Kobayashi-metric experiments on a manifold spec and emit
//! JSON documents or tidy CSV.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 certificate or extraction failure.

mod commands;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use koblab::geometry::{ChartedMetric, ManifoldSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Certificate(_) => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "koblab", version, about = "Kobayashi-Royden pseudometric laboratory")]
struct Cli {
    /// Manifold spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Builtin model instead of a spec file (euclidean, poincare_disc,
    /// hyperbolic_ball, flat_torus).
    #[arg(long, global = true)]
    model: Option<String>,
    /// Dimension for --model.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Experiment config (JSON, unknown fields rejected); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tension threshold for admissible discs.
    #[arg(long = "tol-h", global = true)]
    tol_h: Option<f64>,
    /// Conformality threshold for admissible discs.
    #[arg(long = "tol-c", global = true)]
    tol_c: Option<f64>,
    #[command(subcommand)]
    command: commands::Command,
}

/// Contents of `--config`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    spec: Option<PathBuf>,
    model: Option<String>,
    dim: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
    threads: Option<usize>,
    tol_h: Option<f64>,
    tol_c: Option<f64>,
    #[serde(default)]
    params: commands::Params,
}

/// Global settings after merging the config file and the flags.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub spec: ManifoldSpec,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
    pub tol_h: f64,
    pub tol_c: f64,
}

pub struct Context {
    pub resolved: Resolved,
    pub manifold: ChartedMetric,
    pub params: commands::Params,
}

/// A finished run: the JSON document, its CSV rendering and an exit status
/// that may signal a certificate failure while still emitting output.
pub struct Output {
    pub document: serde_json::Value,
    pub csv: String,
    pub failure: Option<CliError>,
}

fn resolve(cli: &Cli) -> Result<Context, CliError> {
    let file: FileConfig = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let spec_path = cli.spec.clone().or(file.spec.clone());
    let model = cli.model.clone().or(file.model.clone());
    let spec = match (spec_path, model) {
        (Some(p), _) => ManifoldSpec::from_path(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        (None, Some(m)) => ManifoldSpec::builtin(&m, cli.dim.or(file.dim).unwrap_or(2)),
        (None, None) => return Err(CliError::Config("either --spec or --model is required".into())),
    };
    let manifold = spec.build().map_err(|e| CliError::Config(e.to_string()))?;
    let resolved = Resolved {
        spec,
        format: cli.format.or(file.format).unwrap_or(Format::Json),
        seed: cli.seed.or(file.seed).unwrap_or(0),
        threads: cli.threads.or(file.threads),
        tol_h: cli.tol_h.or(file.tol_h).unwrap_or(koblab::tolerances::TAU_H),
        tol_c: cli.tol_c.or(file.tol_c).unwrap_or(koblab::tolerances::TAU_C),
    };
    if !(resolved.tol_h > 0.0 && resolved.tol_c > 0.0) {
        return Err(CliError::Config("tolerances must be positive".into()));
    }
    Ok(Context {
        resolved,
        manifold,
        params: file.params,
    })
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let ctx = resolve(cli)?;
    if let Some(n) = ctx.resolved.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    commands::dispatch(&cli.command, &ctx)
}

fn emit(cli: &Cli, out: &Output) -> Result<(), CliError> {
    let file_out = cli.out.clone().or_else(|| {
        cli.config
            .as_ref()
            .and_then(|p| fs::read_to_string(p).ok())
            .and_then(|t| serde_json::from_str::<FileConfig>(&t).ok())
            .and_then(|f| f.out)
    });
    let format = cli.format.unwrap_or_else(|| {
        out.document["config"]["format"]
            .as_str()
            .map_or(Format::Json, |f| if f == "csv" { Format::Csv } else { Format::Json })
    });
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.document).map_err(|e| CliError::Numerical(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => out.csv.clone(),
    };
    match file_out {
        Some(p) => fs::write(&p, text).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            // A closed downstream pipe (`| head`) is not an error.
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Config(e.to_string())),
            _ => Ok(()),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KOBLAB_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out) {
                eprintln!("koblab: {e}");
                return ExitCode::from(e.exit_code());
            }
            match &out.failure {
                Some(e) => {
                    eprintln!("koblab: {e}");
                    ExitCode::from(e.exit_code())
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("koblab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
