//! WebAssembly bindings for the demo page in `www/`.
//!
//! Points travel as flat `Float64Array`s: `[x0, y0, x1, y1, ...]` in the
//! Poincare disk, `[x0, y0, z0, ...]` unit vectors on the sphere.

use geodescent::descent::StopCriteria;
use geodescent::frechet::{center_of_mass_with, varrho_p, CenterResult, MassProblem, SolveOptions, WeightedPoints};
use geodescent::stepsize::StepRule;
use geodescent::{Ball, Manifold, Point};
use wasm_bindgen::prelude::*;

const H2: Manifold = Manifold::Hyperbolic { dim: 2 };
const S2: Manifold = Manifold::Sphere { dim: 2 };
const MAX_ITERS: usize = 5000;
const GRAD_TOL: f64 = 1e-10;

/// Outcome of one solve, in display coordinates.
#[wasm_bindgen]
pub struct Solution {
    center: Vec<f64>,
    path: Vec<f64>,
    values: Vec<f64>,
    steps: Vec<f64>,
    status: String,
    rate: f64,
}

#[wasm_bindgen]
impl Solution {
    #[wasm_bindgen(getter)]
    pub fn center(&self) -> Vec<f64> {
        self.center.clone()
    }

    /// Iterates, flattened like the input points.
    #[wasm_bindgen(getter)]
    pub fn path(&self) -> Vec<f64> {
        self.path.clone()
    }

    /// Objective value per iterate.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Accepted step size per transition.
    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> Vec<f64> {
        self.steps.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    #[wasm_bindgen(getter)]
    pub fn status(&self) -> String {
        self.status.clone()
    }

    /// Fitted linear rate of the distances to the center, `NaN` when the
    /// trace was too short to fit.
    #[wasm_bindgen(getter)]
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Poincare disk to hyperboloid.
pub fn disk_to_hyperboloid(x: f64, y: f64) -> Result<Point, String> {
    let r2 = x * x + y * y;
    if r2 >= 1.0 {
        return Err(err(format!("({x}, {y}) is outside the unit disk")));
    }
    let s = 1.0 - r2;
    H2.project(vec![(1.0 + r2) / s, 2.0 * x / s, 2.0 * y / s]).map_err(err)
}

/// Hyperboloid to Poincare disk.
pub fn hyperboloid_to_disk(c: &[f64]) -> [f64; 2] {
    [c[1] / (1.0 + c[0]), c[2] / (1.0 + c[0])]
}

fn rule(name: &str, beta: f64, t0: f64) -> Result<StepRule, String> {
    match name {
        "armijo" => StepRule::armijo(beta).map_err(err),
        "constant" => StepRule::constant(t0).map_err(err),
        other => Err(err(format!("unknown step rule {other:?}"))),
    }
}

fn solve(prob: &MassProblem, rule: &StepRule, to_display: impl Fn(&[f64]) -> Vec<f64>) -> Result<Solution, String> {
    let stop = StopCriteria { grad_tol: GRAD_TOL, max_iters: MAX_ITERS, point_tol: None };
    let opts = SolveOptions { lambda_samples: 256, ..SolveOptions::default() };
    let CenterResult { center, trace, certificates } =
        center_of_mass_with(prob, &prob.anchor, rule, &stop, &opts).map_err(err)?;
    let status = if trace.status.converged() { "converged".to_string() } else { format!("{:?}", trace.status) };
    Ok(Solution {
        center: to_display(center.coords()),
        path: trace.records.iter().flat_map(|r| to_display(&r.point)).collect(),
        values: trace.records.iter().map(|r| r.value).collect(),
        steps: trace.records.iter().filter_map(|r| r.step).collect(),
        status,
        rate: certificates.rate_fit.map_or(f64::NAN, |f| f.rho),
    })
}

/// Weighted `L^p` center of points in the Poincare disk, started from
/// their normalized extrinsic mean. `weights` may be
/// empty for uniform weights. `rule` is `"armijo"` (uses `beta`) or
/// `"constant"` (uses `t0`).
pub fn solve_disk(xy: &[f64], weights: &[f64], p: f64, rule_name: &str, beta: f64, t0: f64) -> Result<Solution, String> {
    if !xy.len().is_multiple_of(2) {
        return Err("disk points need two coordinates each".into());
    }
    let points = xy.chunks_exact(2).map(|c| disk_to_hyperboloid(c[0], c[1])).collect::<Result<Vec<_>, _>>()?;
    let data = weighted(points, weights)?;
    let anchor = H2.extrinsic_mean(data.points(), data.weights()).map_err(err)?;
    let prob = MassProblem::new(data, p, anchor, f64::INFINITY).map_err(err)?;
    solve(&prob, &rule(rule_name, beta, t0)?, |c| hyperboloid_to_disk(c).to_vec())
}

/// Weighted `L^p` center of unit vectors on the sphere, restricted to the
/// ball around their normalized extrinsic mean on which the problem is
/// well posed. Fails when the data do not fit in that ball.
pub fn solve_sphere(xyz: &[f64], weights: &[f64], p: f64, rule_name: &str, beta: f64, t0: f64) -> Result<Solution, String> {
    if !xyz.len().is_multiple_of(3) {
        return Err("sphere points need three coordinates each".into());
    }
    let points = xyz.chunks_exact(3).map(|c| S2.project(c.to_vec()).map_err(err)).collect::<Result<Vec<_>, _>>()?;
    let data = weighted(points, weights)?;
    let anchor = S2.extrinsic_mean(data.points(), data.weights()).map_err(err)?;
    let bounds = S2.curvature_bounds(&Ball::new(anchor.clone(), f64::INFINITY));
    let rho = varrho_p(p, f64::INFINITY, bounds, S2.injectivity_radius(&anchor));
    let prob = MassProblem::new(data, p, anchor, rho).map_err(err)?;
    solve(&prob, &rule(rule_name, beta, t0)?, <[f64]>::to_vec)
}

#[wasm_bindgen(js_name = diskCenter)]
pub fn disk_center(xy: &[f64], weights: &[f64], p: f64, rule: &str, beta: f64, t0: f64) -> Result<Solution, JsError> {
    solve_disk(xy, weights, p, rule, beta, t0).map_err(js)
}

#[wasm_bindgen(js_name = sphereCenter)]
pub fn sphere_center(xyz: &[f64], weights: &[f64], p: f64, rule: &str, beta: f64, t0: f64) -> Result<Solution, JsError> {
    solve_sphere(xyz, weights, p, rule, beta, t0).map_err(js)
}

/// Radius of the ball sphere data must lie in for exponent `p`.
#[wasm_bindgen(js_name = sphereRadius)]
pub fn sphere_radius(p: f64) -> f64 {
    let x = Point::origin(S2);
    let bounds = S2.curvature_bounds(&Ball::new(x.clone(), f64::INFINITY));
    varrho_p(p, f64::INFINITY, bounds, S2.injectivity_radius(&x))
}

fn weighted(points: Vec<Point>, weights: &[f64]) -> Result<WeightedPoints, String> {
    if weights.is_empty() {
        WeightedPoints::uniform(points).map_err(err)
    } else {
        let total: f64 = weights.iter().sum();
        WeightedPoints::new(points, weights.iter().map(|w| w / total).collect()).map_err(err)
    }
}
