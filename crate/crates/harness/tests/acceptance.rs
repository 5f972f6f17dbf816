//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! so every criterion prints its verdict; exits non-zero if any fails.

use geodescent::calculus::{finite_diff_gradient_check, lipschitz_estimate, FD_STEP};
use geodescent::descent::{estimate_linear_rate, gradient_descent, quasi_fejer_check, IterateTrace, StopCriteria, TerminalStatus};
use geodescent::frechet::{
    center_of_mass, center_of_mass_with, fp_value, lambda_p_estimate, varrho_p, CenterResult, MassProblem, SolveOptions,
    WeightedPoints, LAMBDA_SAMPLES,
};
use geodescent::geometry::{random_point_with, random_tangent_with, sample_rng};
use geodescent::stepsize::{step_lower_bound, StepRule};
use geodescent::{Ball, Manifold, Point};
use geodescent_harness::bench::fixture_data;
use geodescent_harness::verify::{run_suite, VerifyOptions};
use rand::Rng;
use std::time::{Duration, Instant};

const R3: Manifold = Manifold::Euclidean { dim: 3 };
const S3: Manifold = Manifold::Sphere { dim: 3 };
const H3: Manifold = Manifold::Hyperbolic { dim: 3 };
const SPD3: Manifold = Manifold::Spd { n: 3 };
const BACKENDS: [Manifold; 4] = [R3, S3, H3, SPD3];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Traces collected along the way, re-examined by the ledger and Fejer
/// criteria.
#[derive(Default)]
struct Collected {
    armijo: Vec<IterateTrace>,
    all: Vec<IterateTrace>,
}

impl Collected {
    fn add(&mut self, trace: &IterateTrace) {
        if trace.beta.is_some() {
            self.armijo.push(trace.clone());
        }
        self.all.push(trace.clone());
    }
}

fn stop(grad_tol: f64) -> StopCriteria {
    StopCriteria { grad_tol, max_iters: 20_000, point_tol: None }
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

/// Radius of the default feasible ball for `p` on `m`, centred at the origin.
fn default_rho(m: Manifold, p: f64) -> f64 {
    let o = Point::origin(m);
    varrho_p(p, f64::INFINITY, m.curvature_bounds(&Ball::new(o.clone(), f64::INFINITY)), m.injectivity_radius(&o))
}

fn problem(m: Manifold, n: usize, spread: f64, p: f64, seed: u64) -> MassProblem {
    let data = fixture_data(m, n, spread, seed);
    MassProblem::new(data, p, Point::origin(m), default_rho(m, p)).expect("valid problem")
}

fn geometry_round_trip() -> Verdict {
    let clock = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for m in BACKENDS {
        let region = Ball::new(Point::origin(m), 2.0);
        for i in 0..10_000u64 {
            let mut rng = sample_rng(11, i);
            let x = random_point_with(&region, &mut rng);
            let cap = 1.0f64.min(0.4 * m.injectivity_radius(&x));
            let v = random_tangent_with(&x, cap, &mut rng);
            let back = m.log(&x, &m.exp(&x, &v).expect("exp")).expect("log");
            let err = m.norm(&back.add(&v.scale(-1.0)).expect("same base")) / (1.0 + m.norm(&v));
            if err > worst {
                worst = err;
                worst_at = m.to_string();
            }
        }
    }
    let t = clock.elapsed();
    verdict(
        worst <= 1e-9 && t < Duration::from_secs(5),
        format!("worst |log(exp v) - v| / (1 + |v|) = {worst:.2e} ({worst_at}), 4 x 10^4 samples in {}", secs(t)),
    )
}

fn gradient_oracle() -> Verdict {
    let clock = Instant::now();
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let mut checked = 0;
    for m in BACKENDS {
        for (j, p) in [1.0, 1.5, 2.0, 3.0].into_iter().enumerate() {
            let prob = problem(m, 6, 0.8, p, 100 + j as u64);
            let region = Ball::new(Point::origin(m), 0.9f64.min(0.9 * prob.rho));
            let mut i = 0u64;
            let mut accepted = 0;
            while accepted < 100 {
                let mut rng = sample_rng(21 + j as u64, i);
                i += 1;
                let x = random_point_with(&region, &mut rng);
                let near = prob.data.points().iter().any(|y| m.dist(&x, y).unwrap() < 0.05);
                if p < 2.0 && near {
                    continue;
                }
                accepted += 1;
                let err = finite_diff_gradient_check(&prob, &x, FD_STEP).expect("interior point");
                if err > worst {
                    worst = err;
                    where_ = format!("{m}, p = {p}");
                }
            }
            checked += accepted;
        }
    }
    let t = clock.elapsed();
    verdict(
        worst <= 1e-6 && t < Duration::from_secs(10),
        format!("worst relative error {worst:.2e} ({where_}) over {checked} points in {}", secs(t)),
    )
}

fn closed_form_means(c: &mut Collected) -> Verdict {
    let prob = problem(R3, 12, 2.0, 2.0, 31);
    let mut mean = [0.0; 3];
    for (y, w) in prob.data.points().iter().zip(prob.data.weights()) {
        mean.iter_mut().zip(y.coords()).for_each(|(a, b)| *a += w * b);
    }
    let x0 = R3.point(vec![3.0, -2.0, 1.0]).unwrap();
    let res = center_of_mass(&prob, &x0, &StepRule::armijo(0.5).unwrap(), &stop(1e-12)).expect("euclidean solve");
    c.add(&res.trace);
    let e_err = res.center.coords().iter().zip(&mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let (a, b) = (S3.point(vec![1.0, 0.0, 0.0, 0.0]).unwrap(), S3.point(vec![0.6, 0.8, 0.0, 0.0]).unwrap());
    let mid = S3.exp(&a, &S3.log(&a, &b).unwrap().scale(0.5)).unwrap();
    let data = WeightedPoints::uniform(vec![a.clone(), b]).unwrap();
    let sprob = MassProblem::new(data, 2.0, a.clone(), default_rho(S3, 2.0)).unwrap();
    let x0 = S3.project(vec![0.9, 0.1, 0.3, 0.2]).unwrap();
    let sres = center_of_mass(&sprob, &x0, &StepRule::armijo(0.5).unwrap(), &stop(1e-12)).expect("sphere solve");
    c.add(&sres.trace);
    let s_err = S3.dist(&sres.center, &mid).unwrap();
    verdict(
        e_err <= 1e-10 && s_err <= 1e-8,
        format!("Euclidean mean error {e_err:.2e}, sphere midpoint error {s_err:.2e}"),
    )
}

/// Plain Weiszfeld iteration, written independently of the library.
fn weiszfeld_oracle(points: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let dim = points[0].len();
    let mut x = vec![0.0; dim];
    for (p, wi) in points.iter().zip(w) {
        x.iter_mut().zip(p).for_each(|(a, b)| *a += wi * b);
    }
    for _ in 0..100_000 {
        let (mut num, mut den) = (vec![0.0; dim], 0.0);
        for (p, wi) in points.iter().zip(w) {
            let d = p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt().max(1e-300);
            num.iter_mut().zip(p).for_each(|(s, c)| *s += wi * c / d);
            den += wi / d;
        }
        let next: Vec<f64> = num.iter().map(|s| s / den).collect();
        let step = next.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    x
}

/// The median sits at `y_j` exactly when `|sum_{i != j} w_i u_ij| <= w_j`,
/// `u_ij` the unit vector from `y_j` to `y_i`. Neither descent nor
/// Weiszfeld has a gradient there, so such draws are not used as oracle
/// instances.
fn median_at_data_point(rows: &[Vec<f64>], w: &[f64]) -> bool {
    (0..rows.len()).any(|j| {
        let mut pull = vec![0.0; rows[j].len()];
        for (i, (r, wi)) in rows.iter().zip(w).enumerate() {
            if i == j {
                continue;
            }
            let d = r.iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            pull.iter_mut().zip(r.iter().zip(&rows[j])).for_each(|(p, (a, b))| *p += wi * (a - b) / d);
        }
        pull.iter().map(|x| x * x).sum::<f64>().sqrt() <= w[j]
    })
}

fn weiszfeld_agreement(c: &mut Collected) -> Verdict {
    let mut worst = 0.0f64;
    let (mut used, mut skipped, mut seed) = (0, 0, 0u64);
    while used < 20 {
        let m = Manifold::Euclidean { dim: 2 + (seed as usize % 2) };
        let prob = problem(m, 10, 1.0, 1.0, 400 + seed);
        seed += 1;
        let rows: Vec<Vec<f64>> = prob.data.points().iter().map(|p| p.coords().to_vec()).collect();
        if median_at_data_point(&rows, prob.data.weights()) {
            skipped += 1;
            continue;
        }
        used += 1;
        let x0 = m.extrinsic_mean(prob.data.points(), prob.data.weights()).unwrap();
        let res = center_of_mass(&prob, &x0, &StepRule::armijo(0.5).unwrap(), &stop(1e-10)).expect("median solve");
        c.add(&res.trace);
        let oracle = weiszfeld_oracle(&rows, prob.data.weights());
        let err = res.center.coords().iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(err);
    }
    verdict(
        worst <= 1e-6,
        format!("20 instances, N = 10 ({skipped} draws with the median at a data point skipped): worst distance to Weiszfeld {worst:.2e}"),
    )
}

fn one_step_estimates() -> Verdict {
    let clock = Instant::now();
    let report = run_suite(&VerifyOptions { samples: 10_000, seed: 0, ..VerifyOptions::default() });
    let t = clock.elapsed();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut missing = false;
    for n in [2, 5] {
        for kind in ["convex_step_bound", "cosh_step_bound", "short_step_bound"] {
            match report.check(&format!("{kind}[H^{n}]")) {
                Some(c) => {
                    violations += c.violations;
                    worst = worst.min(c.worst_margin);
                    missing |= c.samples != 10_000;
                }
                None => missing = true,
            }
        }
    }
    verdict(
        !missing && violations == 0 && t < Duration::from_secs(30),
        format!("H^2 and H^5, 3 x 10^4 samples each: {violations} violations, worst margin {worst:.2e}, {}", secs(t)),
    )
}

/// Armijo runs over every backend and several `p` and `beta`.
fn ledger_runs(c: &mut Collected) {
    for (i, m) in BACKENDS.into_iter().enumerate() {
        for (j, (p, beta)) in [(1.5, 0.3), (2.0, 0.5), (3.0, 0.8)].into_iter().enumerate() {
            let prob = problem(m, 8, 0.6, p, 600 + (3 * i + j) as u64);
            let mut rng = sample_rng(61, (3 * i + j) as u64);
            let x0 = random_point_with(&Ball::new(Point::origin(m), 0.7), &mut rng);
            let res = center_of_mass(&prob, &x0, &StepRule::armijo(beta).unwrap(), &stop(1e-10)).expect("ledger solve");
            c.add(&res.trace);
        }
    }
}

fn decrease_ledger(c: &Collected) -> Verdict {
    let mut bad = 0;
    let mut worst_slack = f64::INFINITY;
    for t in &c.armijo {
        let beta = t.beta.unwrap();
        let f_min = t.values().fold(f64::INFINITY, f64::min);
        let margin = (t.records[0].value - f_min) / beta + 1e-9 - t.weighted_gradient_sum();
        worst_slack = worst_slack.min(margin);
        if !t.decrease_violations(beta, 1e-12).is_empty() || margin < 0.0 {
            bad += 1;
        }
    }
    verdict(
        bad == 0 && !c.armijo.is_empty(),
        format!("{} Armijo traces, {bad} violating; smallest summability margin {worst_slack:.2e}", c.armijo.len()),
    )
}

fn linear_rate(c: &mut Collected) -> Verdict {
    // Sphere data inside U(o, rho / 3) with rho = pi / 2.
    let cases = [(S3, 0.5, 1.2), (H3, 1.5, 2.0), (SPD3, 1.0, 1.5)];
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, (m, spread, start)) in cases.into_iter().enumerate() {
        let prob = problem(m, 10, spread, 2.0, 700 + k as u64);
        let mut rng = sample_rng(71, k as u64);
        let x0 = m.exp(&Point::origin(m), &random_tangent_with(&Point::origin(m), start, &mut rng)).unwrap();
        for constant in [false, true] {
            let clock = Instant::now();
            let (rule, opts) = if constant {
                let lambda = lambda_p_estimate(&prob, &x0, LAMBDA_SAMPLES, 5).unwrap().value;
                let opts = SolveOptions { lambda: Some(lambda), ..SolveOptions::default() };
                (StepRule::constant(1.0 / lambda).unwrap(), opts)
            } else {
                (StepRule::armijo(0.6).unwrap(), SolveOptions::default())
            };
            // Armijo decisions compare values, so they turn to noise once
            // |g|^2 is below the round-off of f (|g| around 1e-9 here).
            let tol = if constant { 1e-13 } else { 1e-9 };
            let res: CenterResult = center_of_mass_with(&prob, &x0, &rule, &stop(tol), &opts).expect("rate solve");
            let t = clock.elapsed();
            c.add(&res.trace);
            let name = if constant { "constant" } else { "armijo" };
            match estimate_linear_rate(&res.trace, None, 0.5) {
                Ok(fit) => {
                    let pass = fit.rho < 1.0 && fit.r_squared > 0.99 && t < Duration::from_secs(2) && res.converged();
                    ok &= pass;
                    lines.push(format!(
                        "{m} {name}: rate {:.3} R^2 {:.4} ({} it, {})",
                        fit.rho,
                        fit.r_squared,
                        res.trace.iterations(),
                        secs(t)
                    ));
                }
                Err(e) => {
                    ok = false;
                    lines.push(format!("{m} {name}: no fit ({e})"));
                }
            }
        }
    }
    verdict(ok, lines.join("; "))
}

fn step_bound(c: &mut Collected) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for (k, m) in BACKENDS.into_iter().enumerate() {
        let beta = 0.5;
        let prob = problem(m, 10, 0.8, 2.0, 800 + k as u64);
        let o = Point::origin(m);
        let x0 = m.exp(&o, &random_tangent_with(&o, 1.0, &mut sample_rng(81, k as u64))).unwrap();
        let res = center_of_mass(&prob, &x0, &StepRule::armijo(beta).unwrap(), &stop(1e-10)).expect("step solve");
        c.add(&res.trace);
        let reach = (0..res.trace.records.len()).map(|i| m.dist(&o, &res.trace.point(i)).unwrap()).fold(0.0, f64::max);
        let l_hat = lipschitz_estimate(&prob, &Ball::new(o, reach * 1.05), 1000, 9).unwrap();
        let bound = 0.5 * step_lower_bound(beta, l_hat);
        let min_t = res.trace.min_step().unwrap_or(f64::INFINITY);
        let pass = res.converged() && min_t >= bound;
        ok &= pass;
        lines.push(format!("{m}: min t {min_t:.3} vs {bound:.3} (L = {l_hat:.3})"));
    }
    verdict(ok, lines.join("; "))
}

fn restarts(c: &mut Collected) -> Verdict {
    let cases = [(R3, 1.0, 1.0), (S3, 0.5, 2.0), (H3, 1.2, 1.5), (SPD3, 0.8, 2.0), (H3, 1.2, 2.0), (R3, 1.0, 3.0)];
    let mut ok = true;
    let mut worst = 0.0f64;
    for (k, (m, spread, p)) in cases.into_iter().enumerate() {
        let prob = problem(m, 9, spread, p, 900 + k as u64);
        let rho = prob.rho;
        let start_radius = if rho.is_finite() { 0.9 * rho } else { 2.0 };
        let mut centers = Vec::new();
        for s in 0..5u64 {
            let mut rng = sample_rng(91 + k as u64, s);
            let x0 = random_point_with(&Ball::new(prob.anchor.clone(), start_radius * rng.random::<f64>().sqrt()), &mut rng);
            match center_of_mass(&prob, &x0, &StepRule::armijo(0.5).unwrap(), &stop(1e-11)) {
                Ok(res) => {
                    c.add(&res.trace);
                    ok &= res.converged();
                    centers.push(res.center);
                }
                Err(_) => ok = false,
            }
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                worst = worst.max(m.dist(&centers[i], &centers[j]).unwrap());
            }
        }
    }
    verdict(ok && worst <= 1e-7, format!("6 configurations x 5 starts: largest pairwise spread {worst:.2e}"))
}

fn quasi_fejer(c: &Collected) -> Verdict {
    let converged: Vec<&IterateTrace> = c.all.iter().filter(|t| t.status.converged()).collect();
    let failing = converged.iter().filter(|t| !quasi_fejer_check(t, &t.final_point(), None).unwrap_or(false)).count();
    verdict(
        failing == 0 && !converged.is_empty(),
        format!("{} converged traces, {failing} failing", converged.len()),
    )
}

fn constant_step_safety() -> Verdict {
    let prob = problem(R3, 6, 1.0, 2.0, 1100);
    let x0 = R3.point(vec![1.0, 2.0, -1.0]).unwrap();
    let s = StopCriteria { grad_tol: 1e-12, max_iters: 200, point_tol: None };
    let wild = gradient_descent(&prob, &x0, &StepRule::constant(2.5).unwrap(), &s).unwrap();
    let tame = gradient_descent(&prob, &x0, &StepRule::constant(1.0).unwrap(), &s).unwrap();
    let monotone = tame.records.windows(2).all(|w| w[1].value <= w[0].value);
    let f_end = fp_value(&prob, &tame.final_point());
    verdict(
        wild.status == TerminalStatus::ValueIncrease && monotone && tame.status.converged(),
        format!(
            "t0 = 2.5: {:?} after {} steps; t0 = 1: {:?}, monotone = {monotone}, final f = {f_end:.6}",
            wild.status,
            wild.iterations(),
            tame.status
        ),
    )
}

fn main() {
    let mut collected = Collected::default();
    let mut results: Vec<(&str, Verdict)> = vec![
        ("geometry round trip", geometry_round_trip()),
        ("gradient oracle", gradient_oracle()),
        ("closed-form means", closed_form_means(&mut collected)),
        ("geometric median oracle", weiszfeld_agreement(&mut collected)),
        ("one-step distance estimates", one_step_estimates()),
    ];
    let rate = linear_rate(&mut collected);
    let steps = step_bound(&mut collected);
    let restart = restarts(&mut collected);
    ledger_runs(&mut collected);
    results.push(("decrease ledger", decrease_ledger(&collected)));
    results.push(("linear rate", rate));
    results.push(("step lower bound", steps));
    results.push(("restart uniqueness", restart));
    results.push(("quasi-Fejer", quasi_fejer(&collected)));
    results.push(("constant-step safety", constant_step_safety()));

    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
