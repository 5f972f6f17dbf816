//! `geodescent bench`: Armijo, constant-step and (Euclidean medians only)
//! Weiszfeld runs on synthetic fixtures, reported as one CSV row per run.
//!
//! ```toml
//! seed = 1
//! out = "bench.csv"        # optional, stdout otherwise
//!
//! [[fixture]]
//! manifold = { kind = "euclidean", dim = 3 }
//! p = 1.0
//! sizes = [10, 100, 1000]
//! spread = 1.0             # data radius around the canonical origin
//! methods = ["armijo", "constant", "weiszfeld"]
//! beta = 0.5               # Armijo
//! grad_tol = 1e-10
//! max_iters = 20000
//! ```

use crate::config::{read_toml, relative_to, ConfigError};
use crate::{Failure, EXIT_USAGE};
use geodescent::descent::{fit_distances, StopCriteria};
use geodescent::frechet::{
    center_of_mass_with, fp_gradient, lambda_p_estimate, varrho_p, FrechetError, MassProblem, SolveOptions,
    WeightedPoints, LAMBDA_SAMPLES,
};
use geodescent::geometry::{random_point_with, sample_rng};
use geodescent::stepsize::StepRule;
use geodescent::{Ball, Manifold, Point};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Armijo,
    Constant,
    Weiszfeld,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Armijo => "armijo",
            Method::Constant => "constant",
            Method::Weiszfeld => "weiszfeld",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub manifold: Manifold,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

fn default_p() -> f64 {
    2.0
}

fn default_sizes() -> Vec<usize> {
    vec![10, 100, 1000]
}

fn default_spread() -> f64 {
    0.5
}

fn default_methods() -> Vec<Method> {
    vec![Method::Armijo, Method::Constant]
}

fn default_beta() -> f64 {
    0.5
}

fn default_max_iters() -> usize {
    20_000
}

fn default_grad_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default, rename = "fixture")]
    pub fixtures: Vec<Fixture>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<BenchConfig, ConfigError> {
        let mut cfg: BenchConfig = read_toml(path)?;
        cfg.out = cfg.out.map(|o| relative_to(path, &o));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.fixtures.is_empty() {
            return bad("no fixtures to run".into());
        }
        for (i, f) in self.fixtures.iter().enumerate() {
            if !(f.p >= 1.0 && f.p.is_finite()) {
                return bad(format!("fixture {i}: p must be >= 1"));
            }
            if !(f.beta > 0.0 && f.beta < 1.0) {
                return bad(format!("fixture {i}: beta must lie in (0, 1)"));
            }
            if f.sizes.is_empty() || f.sizes.iter().any(|&n| n < 2) {
                return bad(format!("fixture {i}: sizes must be at least 2"));
            }
            if !(f.grad_tol > 0.0) || f.max_iters == 0 {
                return bad(format!("fixture {i}: need grad_tol > 0 and max_iters >= 1"));
            }
            if !(f.spread > 0.0 && f.spread.is_finite()) {
                return bad(format!("fixture {i}: spread must be positive"));
            }
            let euclidean = matches!(f.manifold, Manifold::Euclidean { .. });
            if f.methods.contains(&Method::Weiszfeld) && !(euclidean && f.p == 1.0) {
                return bad(format!("fixture {i}: weiszfeld only applies to Euclidean p = 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: &'static str,
    pub manifold: String,
    pub p: f64,
    pub n: usize,
    pub iterations: usize,
    pub final_grad_norm: Option<f64>,
    pub rate: Option<f64>,
    pub wall_time: f64,
    pub status: String,
    /// Distance from this run's center to the Armijo center of the same data.
    pub dist_to_armijo: Option<f64>,
}

/// Random data of size `n` in `B(origin, spread)` with random positive weights.
pub fn fixture_data(m: Manifold, n: usize, spread: f64, seed: u64) -> WeightedPoints {
    let mut rng = sample_rng(seed, n as u64);
    let ball = Ball::new(Point::origin(m), spread);
    let points: Vec<Point> = (0..n).map(|_| random_point_with(&ball, &mut rng)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let tail: f64 = w[1..].iter().sum();
    w[0] = 1.0 - tail;
    WeightedPoints::new(points, w).expect("fixture weights are valid")
}

fn fixture_problem(f: &Fixture, n: usize, seed: u64) -> Result<MassProblem, FrechetError> {
    let m = f.manifold;
    let data = fixture_data(m, n, f.spread, seed);
    let o = Point::origin(m);
    let rho = if m.is_hadamard() {
        f64::INFINITY
    } else {
        varrho_p(f.p, f64::INFINITY, m.curvature_bounds(&Ball::new(o.clone(), f64::INFINITY)), m.injectivity_radius(&o))
    };
    MassProblem::new(data, f.p, o, rho)
}

/// Classical Weiszfeld iteration for the Euclidean weighted median; returns
/// the iterates. Stops on reaching a data point, where the map is undefined.
pub fn weiszfeld(data: &WeightedPoints, x0: &[f64], tol: f64, max_iters: usize) -> Vec<Vec<f64>> {
    let mut iterates = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for _ in 0..max_iters {
        let mut num = vec![0.0; x.len()];
        let mut den = 0.0;
        for (y, w) in data.points().iter().zip(data.weights()) {
            let d = y.coords().iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d == 0.0 {
                return iterates;
            }
            num.iter_mut().zip(y.coords()).for_each(|(s, c)| *s += w * c / d);
            den += w / d;
        }
        let next: Vec<f64> = num.iter().map(|s| s / den).collect();
        let step = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = next;
        iterates.push(x.clone());
        if step <= tol {
            break;
        }
    }
    iterates
}

struct RunResult {
    row: BenchRow,
    center: Option<Point>,
}

fn run_one(f: &Fixture, n: usize, method: Method, seed: u64) -> RunResult {
    let m = f.manifold;
    let mut row = BenchRow {
        method: method.name(),
        manifold: m.to_string(),
        p: f.p,
        n,
        iterations: 0,
        final_grad_norm: None,
        rate: None,
        wall_time: 0.0,
        status: String::new(),
        dist_to_armijo: None,
    };
    let prob = match fixture_problem(f, n, seed) {
        Ok(p) => p,
        Err(e) => {
            row.status = format!("invalid: {e}");
            return RunResult { row, center: None };
        }
    };
    let x0 = m.extrinsic_mean(prob.data.points(), prob.data.weights()).unwrap_or_else(|_| prob.anchor.clone());
    let stop = StopCriteria { grad_tol: f.grad_tol, max_iters: f.max_iters, point_tol: None };
    let clock = Instant::now();
    let center = match method {
        Method::Weiszfeld => {
            let it = weiszfeld(&prob.data, x0.coords(), 1e-14, f.max_iters);
            row.wall_time = clock.elapsed().as_secs_f64();
            row.iterations = it.len() - 1;
            let last = m.point(it[it.len() - 1].clone()).ok();
            if let Some(c) = &last {
                row.final_grad_norm = fp_gradient(&prob, c).ok().map(|g| m.norm(&g));
                let dists: Vec<f64> =
                    it[..it.len() - 1].iter().map(|x| x.iter().zip(c.coords()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).collect();
                row.rate = fit_distances(&dists, 0.5).ok().map(|r| r.rho);
            }
            row.status = "done".into();
            last
        }
        Method::Armijo | Method::Constant => {
            let mut opts = SolveOptions { seed, ..SolveOptions::default() };
            let rule = if method == Method::Armijo {
                StepRule::armijo(f.beta)
            } else {
                match lambda_p_estimate(&prob, &x0, LAMBDA_SAMPLES, seed) {
                    Ok(est) => {
                        opts.lambda = Some(est.value);
                        StepRule::constant(1.0 / est.value)
                    }
                    Err(e) => {
                        row.status = format!("lambda: {e}");
                        return RunResult { row, center: None };
                    }
                }
            };
            let rule = rule.expect("validated fixture parameters");
            match center_of_mass_with(&prob, &x0, &rule, &stop, &opts) {
                Ok(res) => {
                    row.wall_time = clock.elapsed().as_secs_f64();
                    row.iterations = res.trace.iterations();
                    row.final_grad_norm = res.certificates.grad_norm_final;
                    row.rate = res.certificates.rate_fit.as_ref().map(|r| r.rho);
                    row.status = format!("{:?}", res.trace.status);
                    Some(res.center)
                }
                Err(e) => {
                    row.wall_time = clock.elapsed().as_secs_f64();
                    row.status = match e {
                        FrechetError::ValidationFailure(r) => format!("rejected: {}", r.summary()),
                        other => format!("failed: {other}"),
                    };
                    None
                }
            }
        }
    };
    RunResult { row, center }
}

/// Runs every (fixture, size, method) combination in parallel and returns
/// the rows in configuration order.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRow> {
    let jobs: Vec<(usize, &Fixture, usize)> = cfg
        .fixtures
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.sizes.iter().map(move |&n| (i, f, n)))
        .collect();
    let groups: Vec<Vec<BenchRow>> = jobs
        .par_iter()
        .map(|&(i, f, n)| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let results: Vec<RunResult> = f.methods.par_iter().map(|&meth| run_one(f, n, meth, seed)).collect();
            let reference =
                f.methods.iter().position(|&m| m == Method::Armijo).and_then(|k| results[k].center.clone());
            results
                .into_iter()
                .map(|mut r| {
                    if let (Some(a), Some(c)) = (&reference, &r.center) {
                        r.row.dist_to_armijo = f.manifold.dist(a, c).ok();
                    }
                    r.row
                })
                .collect()
        })
        .collect();
    groups.concat()
}

pub fn rows_to_csv(rows: &[BenchRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn cmd_bench(cfg: &BenchConfig) -> Result<String, Failure> {
    let csv = rows_to_csv(&run_bench(cfg)).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    if let Some(path) = &cfg.out {
        std::fs::write(path, &csv).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    }
    Ok(csv)
}
