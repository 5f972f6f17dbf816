//! Numerical checks of the one-step distance estimates for gradient steps on
//! hyperbolic space, and of the bounded-product sequence property used in the
//! convergence proofs.
//!
//! Every check is a theorem, so the expected violation count is zero for any
//! seed. The objective is the squared-distance center-of-mass function
//! `f(x) = 1/2 sum_i w_i d^2(x, a_i)` with random anchors `a_i`, which is
//! geodesically convex on `H^n` (curvature `-1`).

use geodescent::calculus::hbar;
use geodescent::descent::{gradient_descent, quasi_fejer_check, IterateTrace, StopCriteria};
use geodescent::frechet::{fp_gradient, fp_value, MassProblem, WeightedPoints};
use geodescent::geometry::{random_point_with, sample_rng};
use geodescent::stepsize::StepRule;
use geodescent::{Ball, Manifold, Point};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Allowed excess of the left-hand side over the right-hand side.
pub const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Hyperbolic dimensions to test.
    pub dims: Vec<usize>,
    /// Descent runs per dimension for the quasi-Fejer check.
    pub runs: usize,
    /// Synthetic sequences per family for the bounded-product check.
    pub sequences: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 10_000, seed: 0, dims: vec![2, 5], runs: 20, sequences: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `rhs - lhs` seen (negative beyond `-SLACK` means violated).
    pub worst_margin: f64,
    pub parameters: BTreeMap<String, Value>,
}

impl CheckResult {
    fn from_margins(name: String, margins: &[f64], parameters: BTreeMap<String, Value>) -> CheckResult {
        CheckResult {
            name,
            samples: margins.len(),
            violations: margins.iter().filter(|m| !(**m >= -SLACK)).count(),
            worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
            parameters,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(checks: Vec<CheckResult>) -> SuiteReport {
        let passed = checks.iter().all(CheckResult::passed);
        SuiteReport { checks, passed }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Radius around the hyperboloid vertex holding the anchors.
const ANCHOR_RADIUS: f64 = 2.0;
/// Radius around the vertex holding `x` and `z`.
const POINT_RADIUS: f64 = 3.0;

/// `f` with 2 to 5 random anchors and random weights.
fn random_objective<R: Rng>(m: Manifold, rng: &mut R) -> MassProblem {
    let k = rng.random_range(2..=5);
    let ball = Ball::new(Point::origin(m), ANCHOR_RADIUS);
    let points: Vec<Point> = (0..k).map(|_| random_point_with(&ball, rng)).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - head;
    let data = WeightedPoints::new(points, weights).expect("random weights are valid");
    MassProblem::unconstrained(data, 2.0).expect("p = 2 is valid")
}

/// Margins of the three one-step estimates at one random configuration with
/// `s = t |grad f(x)|` (curvature `-1`).
struct StepMargins {
    convex: f64,
    cosh: f64,
    short: f64,
}

fn step_margins(prob: &MassProblem, x: &Point, z: &Point, s: f64) -> Option<StepMargins> {
    let m = prob.manifold();
    let g = fp_gradient(prob, x).ok()?;
    let gn = m.norm(&g);
    if gn < 1e-8 {
        return None;
    }
    let t = s / gn;
    let y = m.exp(x, &g.scale(-t)).ok()?;
    let d0 = m.dist(x, z).ok()?;
    let dt = m.dist(&y, z).ok()?;
    let h = hbar(d0).ok()?;
    let (fx, fz) = (fp_value(prob, x), fp_value(prob, z));

    let convex_rhs = d0 * d0 + 2.0 * s.sinh() / (gn * h) * (t * gn * gn / 2.0 - h * (fx - fz));
    let cosh_rhs = d0.cosh() * (1.0 + 0.5 * s * s.sinh());
    let short_rhs = d0 * d0 + 3.0 * s * s / (2.0 * h);
    Some(StepMargins { convex: convex_rhs - dt * dt, cosh: cosh_rhs - dt.cosh(), short: short_rhs - dt * dt })
}

/// Draws an objective, `x`, `z` with `f(z) <= f(x)` and `s` from `draw_s`.
/// `draw_s` maps a uniform draw in `[0, 1)` to `s`.
fn sample_margins(m: Manifold, seed: u64, index: u64, draw_s: impl Fn(f64) -> f64) -> StepMargins {
    let mut rng = sample_rng(seed, index);
    loop {
        let prob = random_objective(m, &mut rng);
        let ball = Ball::new(Point::origin(m), POINT_RADIUS);
        let mut x = random_point_with(&ball, &mut rng);
        let mut z = random_point_with(&ball, &mut rng);
        if fp_value(&prob, &z) > fp_value(&prob, &x) {
            std::mem::swap(&mut x, &mut z);
        }
        let s = draw_s(rng.random::<f64>());
        if let Some(margins) = step_margins(&prob, &x, &z, s) {
            return margins;
        }
    }
}

fn hyperbolic_checks(n: usize, opts: &VerifyOptions) -> Vec<CheckResult> {
    let m = Manifold::Hyperbolic { dim: n };
    let seed = opts.seed.wrapping_add(n as u64);
    let params = |extra: Value| {
        let mut p: BTreeMap<String, Value> = BTreeMap::new();
        p.insert("manifold".into(), json!(m.to_string()));
        p.insert("curvature".into(), json!(-1.0));
        p.insert("seed".into(), json!(opts.seed));
        p.insert("anchor_radius".into(), json!(ANCHOR_RADIUS));
        p.insert("point_radius".into(), json!(POINT_RADIUS));
        if let Value::Object(o) = extra {
            p.extend(o);
        }
        p
    };

    // s = t |grad f(x)| uniform in (0, 1].
    let margins: Vec<StepMargins> = (0..opts.samples)
        .into_par_iter()
        .map(|i| sample_margins(m, seed, i as u64, |u| 1.0 - u))
        .collect();
    let convex: Vec<f64> = margins.iter().map(|s| s.convex).collect();
    let cosh: Vec<f64> = margins.iter().map(|s| s.cosh).collect();
    let short: Vec<f64> = margins.iter().map(|s| s.short).collect();

    let edge_samples = (opts.samples / 100).max(10);
    let edge: Vec<f64> = (0..edge_samples)
        .into_par_iter()
        .map(|i| {
            let s = sample_margins(m, seed.wrapping_add(1 << 32), i as u64, |_| 0.0);
            // All three bounds are equalities at t = 0, so the margins must vanish.
            0.0 - s.convex.abs().max(s.cosh.abs()).max(s.short.abs())
        })
        .collect();

    let mut out = vec![
        CheckResult::from_margins(format!("convex_step_bound[{m}]"), &convex, params(json!({"step": "t |g| in (0, 1]"}))),
        CheckResult::from_margins(format!("cosh_step_bound[{m}]"), &cosh, params(json!({"step": "t |g| in (0, 1]"}))),
        CheckResult::from_margins(format!("short_step_bound[{m}]"), &short, params(json!({"step": "t |g| in (0, 1]"}))),
        CheckResult::from_margins(format!("zero_step_edge[{m}]"), &edge, params(json!({"step": "t = 0"}))),
    ];
    out.push(quasi_fejer_runs(m, seed, opts.runs, params(json!({"rule": "armijo", "beta": 0.5}))));
    out
}

fn descent_run(m: Manifold, seed: u64, index: u64) -> (IterateTrace, bool) {
    let mut rng = sample_rng(seed.wrapping_add(2 << 32), index);
    let prob = random_objective(m, &mut rng);
    let x0 = random_point_with(&Ball::new(Point::origin(m), POINT_RADIUS), &mut rng);
    let stop = StopCriteria { grad_tol: 1e-10, max_iters: 10_000, point_tol: None };
    let trace = gradient_descent(&prob, &x0, &StepRule::armijo(0.5).expect("valid beta"), &stop).expect("valid start");
    let ok = quasi_fejer_check(&trace, &trace.final_point(), None).unwrap_or(false);
    (trace, ok)
}

/// Smallest `d^2(x_k, z) + eps_k - d^2(x_{k+1}, z)` along a trace, `z` the
/// final iterate and `eps_k = 2 R t_k |g_k|^2`.
fn fejer_margin(trace: &IterateTrace) -> f64 {
    let m = trace.manifold;
    let z = trace.final_point();
    let d2 = |k: usize| m.dist(&trace.point(k), &z).map_or(f64::NAN, |d| d * d);
    trace
        .transitions()
        .enumerate()
        .map(|(k, (t, g))| d2(k) + 2.0 * trace.cap_r * t * g * g - d2(k + 1))
        .fold(f64::INFINITY, f64::min)
}

fn quasi_fejer_runs(m: Manifold, seed: u64, runs: usize, mut params: BTreeMap<String, Value>) -> CheckResult {
    let results: Vec<(IterateTrace, bool)> = (0..runs).into_par_iter().map(|i| descent_run(m, seed, i as u64)).collect();
    let margins: Vec<f64> = results.iter().map(|(t, _)| fejer_margin(t)).collect();
    let mut check = CheckResult::from_margins(format!("quasi_fejer[{m}]"), &margins, BTreeMap::new());
    // Count a run as violating if either the library check or the margin says so.
    check.violations = results.iter().zip(&margins).filter(|((_, ok), mg)| !ok || !(**mg >= -SLACK)).count();
    params.insert("transitions".into(), json!(results.iter().map(|(t, _)| t.iterations()).sum::<usize>()));
    params.insert("unconverged_runs".into(), json!(results.iter().filter(|(t, _)| !t.status.converged()).count()));
    check.parameters = params;
    check
}

/// Length of each synthetic sequence.
const SEQUENCE_LEN: usize = 2000;

/// Named summable sequence `b_k(u)`.
type Family = (&'static str, fn(usize, f64) -> f64);

/// Checks `a_{k+1} <= a_k (1 + b_k)`, `sum b_k < inf`, `a_k >= 0` implies
/// that `a_k` is bounded by `a_0 prod (1 + b_k)` and converges: `c_k = a_k
/// prod_{j >= k} (1 + b_j)` is non-increasing.
///
/// Margins are relative to `a_0 prod_k (1 + b_k)`.
fn sequence_check(opts: &VerifyOptions) -> CheckResult {
    let families: [Family; 3] = [
        ("2^-k", |k, _| 0.5f64.powi(k as i32)),
        ("1/(k+1)^2", |k, _| 1.0 / ((k + 1) * (k + 1)) as f64),
        ("u/(k+1)^1.5", |k, u| u / ((k + 1) as f64).powf(1.5)),
    ];
    let margins: Vec<f64> = (0..families.len() * opts.sequences)
        .into_par_iter()
        .map(|i| {
            let (_, b_of) = families[i % families.len()];
            let mut rng = sample_rng(opts.seed.wrapping_add(3 << 32), i as u64);
            let b: Vec<f64> = (0..SEQUENCE_LEN).map(|k| b_of(k, rng.random::<f64>())).collect();
            // Half of the sequences meet the recursion with equality, the
            // others shrink by a random factor each step.
            let exact = (i / families.len()).is_multiple_of(2);
            let mut a = vec![rng.random_range(0.1..10.0)];
            for k in 0..SEQUENCE_LEN {
                let r = if exact { 1.0 } else { rng.random_range(0.9..=1.0) };
                a.push(a[k] * (1.0 + b[k]) * r);
            }
            // tail[k] = prod_{j >= k} (1 + b_j)
            let mut tail = vec![1.0; SEQUENCE_LEN + 1];
            for k in (0..SEQUENCE_LEN).rev() {
                tail[k] = tail[k + 1] * (1.0 + b[k]);
            }
            let bound = a[0] * tail[0];
            let bounded = a.iter().map(|ak| (bound - ak) / bound).fold(f64::INFINITY, f64::min);
            let monotone = (0..SEQUENCE_LEN)
                .map(|k| (a[k] * tail[k] - a[k + 1] * tail[k + 1]) / bound)
                .fold(f64::INFINITY, f64::min);
            bounded.min(monotone)
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("families".into(), json!(families.iter().map(|f| f.0).collect::<Vec<_>>()));
    params.insert("length".into(), json!(SEQUENCE_LEN));
    params.insert("seed".into(), json!(opts.seed));
    CheckResult::from_margins("bounded_product_sequence".into(), &margins, params)
}

/// Runs every check. Independent checks run in parallel; the report is
/// assembled in a fixed order.
pub fn run_suite(opts: &VerifyOptions) -> SuiteReport {
    let (mut checks, seq) = rayon::join(
        || opts.dims.par_iter().map(|&n| hyperbolic_checks(n, opts)).collect::<Vec<_>>().concat(),
        || sequence_check(opts),
    );
    checks.push(seq);
    SuiteReport::new(checks)
}
