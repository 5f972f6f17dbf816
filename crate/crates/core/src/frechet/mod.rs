//! Riemannian `L^p` centers of mass.
//!
//! For weighted data `y_i` the objective is
//! `f_p(x) = (1/p) sum_i w_i d^p(x, y_i)`, restricted to the open ball
//! `U(o, rho)` (it is `+inf` outside). Its unique minimizer is the `L^p`
//! center: the Karcher mean for `p = 2`, the geometric median for `p = 1`.
//!
//! The solver is plain geodesic gradient descent ([`center_of_mass`]); the
//! rest of the module checks that a configuration is one where that is known
//! to converge ([`validate_configuration`]) and estimates the curvature scale
//! that bounds admissible constant steps ([`lambda_p_estimate`]).

mod lambda;
mod solve;
mod validate;

pub use lambda::{lambda_p_estimate, LambdaEstimate, LAMBDA_SAFETY, LAMBDA_SAMPLES};
pub use solve::{center_of_mass, center_of_mass_with, Certificates, CenterResult, SolveOptions};
pub use validate::{colinearity_check, validate_configuration, Check, CheckStatus, ValidationReport, COLINEAR_TOL};

use crate::calculus::{CalculusError, DomainStatus, Objective, ObjectiveError};
use crate::descent::{DescentError, IterateTrace};
use crate::geometry::{CurvatureBounds, GeometryError, Manifold, Point, Tangent};
use crate::numeric::{map_indexed, CompensatedSum};
use std::f64::consts::PI;
use thiserror::Error;

/// Distance to a data point at or below which the gradient of `f_p`,
/// `p < 2`, is treated as undefined.
pub const SINGULAR_TOL: f64 = 1e-9;

/// Data sets at least this large evaluate their terms in parallel. The terms
/// are still summed in index order, so results do not depend on threads.
const PARALLEL_TERMS: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrechetError {
    #[error("invalid data set: {0}")]
    InvalidData(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("iterate is within {distance:e} of data point {index}; f_p is not differentiable there")]
    SingularIterate { index: usize, distance: f64 },
    #[error("point lies outside U(o, rho)")]
    OutsideDomain,
    #[error("c_delta(l) needs 0 < l < pi / sqrt(delta); got delta = {delta}, l = {l}")]
    RangeViolation { delta: f64, l: f64 },
    #[error("configuration failed validation: {}", .0.summary())]
    ValidationFailure(Box<ValidationReport>),
    #[error("solver failed: {detail}")]
    StepFailure { detail: String, trace: Box<IterateTrace> },
    #[error(transparent)]
    Descent(#[from] DescentError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Data points with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoints {
    points: Vec<Point>,
    weights: Vec<f64>,
}

/// Tolerance on `sum w_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl WeightedPoints {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<WeightedPoints, FrechetError> {
        if points.len() != weights.len() {
            return Err(FrechetError::InvalidData(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.len() < 2 {
            return Err(FrechetError::InvalidData(format!("need at least 2 points, got {}", points.len())));
        }
        let m = points[0].manifold();
        if let Some(i) = points.iter().position(|p| p.manifold() != m) {
            return Err(FrechetError::InvalidData(format!(
                "point {i} lives on {}, point 0 on {m}",
                points[i].manifold()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && *w < 1.0)) {
            return Err(FrechetError::InvalidData(format!("weight {i} = {} is not in (0, 1)", weights[i])));
        }
        let mut sum = CompensatedSum::default();
        weights.iter().for_each(|&w| sum.add(w));
        let sum = sum.value();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FrechetError::InvalidData(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightedPoints { points, weights })
    }

    /// Equal weights `1 / N`.
    pub fn uniform(points: Vec<Point>) -> Result<WeightedPoints, FrechetError> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        WeightedPoints::new(points, vec![w; n])
    }

    pub fn manifold(&self) -> Manifold {
        self.points[0].manifold()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Minimize `f_p` over `U(anchor, rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProblem {
    pub data: WeightedPoints,
    pub p: f64,
    pub anchor: Point,
    /// Radius of the feasible ball; `f64::INFINITY` for the whole manifold.
    pub rho: f64,
}

impl MassProblem {
    pub fn new(data: WeightedPoints, p: f64, anchor: Point, rho: f64) -> Result<MassProblem, FrechetError> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(FrechetError::InvalidProblem(format!("p must lie in [1, inf), got {p}")));
        }
        if !(rho > 0.0) {
            return Err(FrechetError::InvalidProblem(format!("rho must be positive, got {rho}")));
        }
        if anchor.manifold() != data.manifold() {
            return Err(FrechetError::InvalidProblem(format!(
                "anchor lives on {}, data on {}",
                anchor.manifold(),
                data.manifold()
            )));
        }
        Ok(MassProblem { data, p, anchor, rho })
    }

    /// Unconstrained problem (`rho = inf`) anchored at the first data point.
    pub fn unconstrained(data: WeightedPoints, p: f64) -> Result<MassProblem, FrechetError> {
        let anchor = data.points[0].clone();
        MassProblem::new(data, p, anchor, f64::INFINITY)
    }

    pub fn manifold(&self) -> Manifold {
        self.data.manifold()
    }

    fn inside(&self, x: &Point) -> Result<bool, GeometryError> {
        Ok(self.rho == f64::INFINITY || self.manifold().dist(&self.anchor, x)? < self.rho)
    }

    fn distances(&self, x: &Point) -> Result<Vec<f64>, GeometryError> {
        let m = self.manifold();
        let pts = &self.data.points;
        if pts.len() >= PARALLEL_TERMS {
            map_indexed(pts.len(), |i| m.dist(x, &pts[i])).into_iter().collect()
        } else {
            pts.iter().map(|y| m.dist(x, y)).collect()
        }
    }
}

/// `f_p(x)`, or `+inf` when `x` is outside `U(o, rho)` (or not on the
/// problem's manifold).
pub fn fp_value(prob: &MassProblem, x: &Point) -> f64 {
    match prob.inside(x) {
        Ok(true) => {}
        _ => return f64::INFINITY,
    }
    let d = match prob.distances(x) {
        Ok(d) => d,
        Err(_) => return f64::INFINITY,
    };
    let mut sum = CompensatedSum::default();
    for (w, di) in prob.data.weights.iter().zip(&d) {
        sum.add(w * di.powf(prob.p));
    }
    sum.value() / prob.p
}

/// `grad f_p(x) = -sum_{y_i != x} w_i d^{p-2}(x, y_i) log_x y_i`.
pub fn fp_gradient(prob: &MassProblem, x: &Point) -> Result<Tangent, FrechetError> {
    if !prob.inside(x)? {
        return Err(FrechetError::OutsideDomain);
    }
    let m = prob.manifold();
    let p = prob.p;
    let pts = &prob.data.points;
    let term = |i: usize| -> Result<Option<(f64, Tangent)>, FrechetError> {
        let d = m.dist(x, &pts[i])?;
        if p < 2.0 && d <= SINGULAR_TOL {
            return Err(FrechetError::SingularIterate { index: i, distance: d });
        }
        if d == 0.0 {
            return Ok(None);
        }
        let coef = if p == 2.0 { 1.0 } else { d.powf(p - 2.0) };
        Ok(Some((prob.data.weights[i] * coef, m.log(x, &pts[i])?)))
    };
    let terms: Vec<_> = if pts.len() >= PARALLEL_TERMS {
        map_indexed(pts.len(), term)
    } else {
        (0..pts.len()).map(term).collect()
    };
    let mut acc = vec![CompensatedSum::default(); x.coords().len()];
    for t in terms {
        if let Some((c, log)) = t? {
            acc.iter_mut().zip(log.coords()).for_each(|(a, l)| a.add(-c * l));
        }
    }
    Ok(m.project_tangent(x, acc.iter().map(CompensatedSum::value).collect()))
}

impl Objective for MassProblem {
    fn manifold(&self) -> Manifold {
        self.data.manifold()
    }

    fn value(&self, x: &Point) -> f64 {
        fp_value(self, x)
    }

    fn gradient(&self, x: &Point) -> Result<Tangent, ObjectiveError> {
        fp_gradient(self, x).map_err(|e| match e {
            FrechetError::OutsideDomain => ObjectiveError::OutsideDomain,
            FrechetError::Geometry(g) => ObjectiveError::Geometry(g),
            other => ObjectiveError::NotDifferentiable(other.to_string()),
        })
    }

    /// Points within a relative `1e-12` of the sphere `S(o, rho)` are
    /// reported as `Boundary`; `f_p` is still finite there.
    fn domain(&self, x: &Point) -> DomainStatus {
        if self.rho == f64::INFINITY {
            return DomainStatus::Inside;
        }
        match self.manifold().dist(&self.anchor, x) {
            Ok(d) if d < self.rho - 1e-12 * self.rho.max(1.0) => DomainStatus::Inside,
            Ok(d) if d < self.rho => DomainStatus::Boundary,
            _ => DomainStatus::Outside,
        }
    }

    fn lower_bound_hint(&self) -> f64 {
        0.0
    }
}

/// Radius function: `1/2 min{r_inj, pi / (2 sqrt(Delta))}` for `p < 2` and
/// `1/2 min{r_inj, pi / sqrt(Delta)}` for `p >= 2`, where `Delta` is the upper
/// curvature bound; `pi / sqrt(Delta) = inf` when `Delta <= 0`.
///
/// `_r` is the radius of the region the bounds were taken over. The bounds
/// used here are global, so the value does not depend on it.
pub fn varrho_p(p: f64, _r: f64, bounds: CurvatureBounds, r_inj: f64) -> f64 {
    let delta = bounds.kappa_hi;
    let conj = if delta <= 0.0 { f64::INFINITY } else { PI / delta.sqrt() };
    let conj = if p < 2.0 { conj / 2.0 } else { conj };
    0.5 * r_inj.min(conj)
}

/// `c_delta(l)`: `cot(sqrt(delta) l) / sqrt(delta)` for `delta > 0`, `1 / l`
/// for `delta = 0` and `coth(sqrt(-delta) l) / sqrt(-delta)` for `delta < 0`.
pub fn hessian_comparison_term(delta: f64, l: f64) -> Result<f64, FrechetError> {
    if !(l > 0.0) || (delta > 0.0 && l >= PI / delta.sqrt()) {
        return Err(FrechetError::RangeViolation { delta, l });
    }
    Ok(if delta > 0.0 {
        let s = delta.sqrt();
        1.0 / (s * (s * l).tan())
    } else if delta == 0.0 {
        1.0 / l
    } else {
        let s = (-delta).sqrt();
        1.0 / (s * (s * l).tanh())
    })
}
