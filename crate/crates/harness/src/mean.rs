//! `geodescent mean`: one center-of-mass run driven by a [`RunConfig`].

use crate::config::{RunConfig, StepSize};
use crate::dataset::{emit_trace, load_dataset, write_json, DatasetError};
use crate::{Failure, EXIT_SOLVER, EXIT_USAGE, EXIT_VALIDATION};
use geodescent::frechet::{
    center_of_mass_with, lambda_p_estimate, varrho_p, CenterResult, FrechetError, MassProblem, SolveOptions,
    LAMBDA_SAMPLES,
};
use geodescent::stepsize::{RuleKind, StepRule};
use geodescent::{Ball, Point};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CENTER_FILE: &str = "center.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const VALIDATION_FILE: &str = "validation.json";

/// What a run produced. Scientific outputs depend only on the configuration
/// and seed; everything that varies between identical runs goes to
/// [`METADATA_FILE`].
#[derive(Debug)]
pub struct MeanOutcome {
    pub result: CenterResult,
    /// Step size used by a constant rule.
    pub t0: Option<f64>,
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct Metadata {
    timestamp: String,
    wall_time_seconds: f64,
    solver_seconds: f64,
    host: Host,
    version: &'static str,
}

#[derive(Serialize)]
struct Host {
    hostname: Option<String>,
    os: &'static str,
    arch: &'static str,
    threads: usize,
}

fn hostname() -> Option<String> {
    std::env::var("HOSTNAME")
        .ok()
        .or_else(|| fs::read_to_string("/etc/hostname").ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}

fn write_metadata(dir: &Path, started: Instant, solver_seconds: f64) -> Result<(), DatasetError> {
    let timestamp = time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default();
    let meta = Metadata {
        timestamp,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        solver_seconds,
        host: Host {
            hostname: hostname(),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        },
        version: env!("CARGO_PKG_VERSION"),
    };
    write_json(&dir.join(METADATA_FILE), &meta)
}

fn io_failure(e: DatasetError) -> Failure {
    Failure::new(EXIT_USAGE, e.to_string())
}

/// Builds the problem described by `cfg`: the data set, the anchor (default:
/// extrinsic mean of the data) and the radius (default: the largest the
/// convergence theory admits for the backend).
pub fn build_problem(cfg: &RunConfig) -> Result<(MassProblem, Point), Failure> {
    let data = load_dataset(&cfg.data.path, cfg.manifold).map_err(|e| match e {
        DatasetError::InvariantViolation { .. } => Failure::new(EXIT_VALIDATION, e.to_string()),
        _ => Failure::new(EXIT_USAGE, e.to_string()),
    })?;
    let m = data.manifold();
    let invalid = |what: &str, e: &dyn std::fmt::Display| Failure::new(EXIT_VALIDATION, format!("{what}: {e}"));
    let anchor = match &cfg.problem.anchor {
        Some(c) => m.point(c.clone()).map_err(|e| invalid("anchor", &e))?,
        None => m.extrinsic_mean(data.points(), data.weights()).map_err(|e| invalid("anchor", &e))?,
    };
    let rho = match cfg.problem.rho {
        Some(r) => r,
        None if m.is_hadamard() => f64::INFINITY,
        None => {
            let bounds = m.curvature_bounds(&Ball::new(anchor.clone(), f64::INFINITY));
            varrho_p(cfg.problem.p, f64::INFINITY, bounds, m.injectivity_radius(&anchor))
        }
    };
    let x0 = match &cfg.start {
        Some(s) => m.point(s.x0.clone()).map_err(|e| invalid("x0", &e))?,
        None => anchor.clone(),
    };
    let prob = MassProblem::new(data, cfg.problem.p, anchor, rho).map_err(|e| invalid("problem", &e))?;
    Ok((prob, x0))
}

/// Runs the configured solve and writes `center.json`, `trace.csv` and
/// `metadata.json` into the output directory (`validation.json` instead when
/// the configuration is rejected).
///
/// Runs that finish without converging still write their outputs and are
/// reported as a solver failure.
pub fn cmd_mean(cfg: &RunConfig) -> Result<MeanOutcome, Failure> {
    let started = Instant::now();
    let (prob, x0) = build_problem(cfg)?;
    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", out.display())))?;

    let mut opts = SolveOptions { seed: cfg.seed, ..SolveOptions::default() };
    let (rule, t0) = match cfg.rule.rule {
        RuleKind::Armijo => {
            let rule = StepRule::Armijo { beta: cfg.rule.beta, cap_r: 1.0, max_halvings: cfg.rule.max_halvings };
            (rule, None)
        }
        RuleKind::Constant => {
            let t0 = match cfg.rule.t0.unwrap_or(StepSize::Auto) {
                StepSize::Fixed(t) => t,
                StepSize::Auto => {
                    let est = lambda_p_estimate(&prob, &x0, LAMBDA_SAMPLES, cfg.seed)
                        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("cannot estimate lambda: {e}")))?;
                    opts.lambda = Some(est.value);
                    1.0 / est.value
                }
            };
            let rule = StepRule::constant(t0).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            (rule, Some(t0))
        }
    };

    let solve_clock = Instant::now();
    let solved = center_of_mass_with(&prob, &x0, &rule, &cfg.stop.criteria(), &opts);
    let solver_seconds = solve_clock.elapsed().as_secs_f64();
    match solved {
        Ok(result) => {
            write_json(&out.join(CENTER_FILE), &result).map_err(io_failure)?;
            emit_trace(&result.trace, &out.join(TRACE_FILE)).map_err(io_failure)?;
            write_metadata(&out, started, solver_seconds).map_err(io_failure)?;
            if !result.converged() {
                let detail = result.trace.status_detail.clone().unwrap_or_default();
                return Err(Failure::new(
                    EXIT_SOLVER,
                    format!("no convergence after {} iterations ({:?}) {detail}", result.trace.iterations(), result.trace.status),
                ));
            }
            Ok(MeanOutcome { result, t0, out_dir: out })
        }
        Err(FrechetError::ValidationFailure(report)) => {
            write_json(&out.join(VALIDATION_FILE), &report).map_err(io_failure)?;
            write_metadata(&out, started, solver_seconds).map_err(io_failure)?;
            Err(Failure::new(EXIT_VALIDATION, format!("configuration rejected: {}", report.summary())))
        }
        Err(e @ (FrechetError::InvalidData(_) | FrechetError::InvalidProblem(_))) => {
            Err(Failure::new(EXIT_VALIDATION, e.to_string()))
        }
        Err(FrechetError::StepFailure { detail, trace }) => {
            emit_trace(&trace, &out.join(TRACE_FILE)).map_err(io_failure)?;
            write_metadata(&out, started, solver_seconds).map_err(io_failure)?;
            Err(Failure::new(EXIT_SOLVER, format!("solver failed: {detail}")))
        }
        Err(e) => Err(Failure::new(EXIT_SOLVER, e.to_string())),
    }
}
