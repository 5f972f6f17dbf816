//! Objectives on manifolds and numerical calculus around them: the `hbar`
//! comparison function, finite-difference derivative checks and probes for
//! geodesic convexity, sharp minima and gradient Lipschitz constants.

mod probe;

pub use probe::{
    convexity_probe, geodesic_chord_probe, lipschitz_estimate, quasi_convexity_probe,
    weak_sharp_probe, ChordProbe, ProbeReport, Witness, CHORD_SLACK,
};

use crate::geometry::{GeometryError, Manifold, Point, Tangent};
use thiserror::Error;

/// Default step for first-order central differences.
pub const FD_STEP: f64 = 1e-5;
/// Default step for second-order central differences.
pub const FD_STEP_SECOND: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("objective is not differentiable here: {0}")]
    NotDifferentiable(String),
    #[error("point is not interior to the objective's domain")]
    OutsideDomain,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("hbar is defined on [0, inf), got {0}")]
    NegativeArgument(f64),
    #[error("finite-difference stencil left the domain")]
    DomainExit,
    #[error("region radius {radius} exceeds the convexity radius {limit}")]
    RegionTooLarge { radius: f64, limit: f64 },
    #[error("sampled value lies {gap:e} below the candidate minimum")]
    NegativeGap { gap: f64 },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainStatus {
    Inside,
    Boundary,
    Outside,
}

/// An extended-real-valued function on a manifold.
///
/// `value` returns `+inf` exactly where `domain` reports `Outside`. The
/// gradient is only defined on the differentiability set; elsewhere it
/// returns [`ObjectiveError::NotDifferentiable`].
pub trait Objective: Sync {
    fn manifold(&self) -> Manifold;

    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> Result<Tangent, ObjectiveError>;

    fn domain(&self, _x: &Point) -> DomainStatus {
        DomainStatus::Inside
    }

    /// A known lower bound on `inf f`.
    fn lower_bound_hint(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

type ValueFn = dyn Fn(&Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Point) -> Result<Tangent, ObjectiveError> + Send + Sync;

/// Objective assembled from closures. Handy for tests and experiments.
pub struct FnObjective {
    manifold: Manifold,
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
    lower_bound: f64,
}

impl FnObjective {
    pub fn new<V, G>(manifold: Manifold, value: V, gradient: G) -> Self
    where
        V: Fn(&Point) -> f64 + Send + Sync + 'static,
        G: Fn(&Point) -> Result<Tangent, ObjectiveError> + Send + Sync + 'static,
    {
        FnObjective { manifold, value: Box::new(value), gradient: Box::new(gradient), lower_bound: f64::NEG_INFINITY }
    }

    pub fn with_lower_bound(mut self, bound: f64) -> Self {
        self.lower_bound = bound;
        self
    }
}

impl Objective for FnObjective {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point) -> Result<Tangent, ObjectiveError> {
        (self.gradient)(x)
    }

    fn domain(&self, x: &Point) -> DomainStatus {
        if (self.value)(x) == f64::INFINITY {
            DomainStatus::Outside
        } else {
            DomainStatus::Inside
        }
    }

    fn lower_bound_hint(&self) -> f64 {
        self.lower_bound
    }
}

/// `tanh(t) / t`, extended by 1 at the origin.
///
/// Continuous and strictly decreasing on `[0, inf)`, with values in `(0, 1]`.
pub fn hbar(t: f64) -> Result<f64, CalculusError> {
    if t < 0.0 || t.is_nan() {
        return Err(CalculusError::NegativeArgument(t));
    }
    if t < 1e-5 {
        return Ok(1.0 - t * t / 3.0);
    }
    Ok(t.tanh() / t)
}

fn value_at(obj: &dyn Objective, x: &Point, v: &Tangent, s: f64) -> Result<f64, CalculusError> {
    let m = obj.manifold();
    let y = m.exp(x, &v.scale(s))?;
    let f = obj.value(&y);
    if !f.is_finite() {
        return Err(CalculusError::DomainExit);
    }
    Ok(f)
}

/// Compares the directional derivatives `<grad f(x), e_i>` against central
/// differences along geodesics for an orthonormal basis `e_i` of `T_x M`.
///
/// Returns the worst absolute discrepancy divided by `max(|grad f(x)|, 1e-12)`.
pub fn finite_diff_gradient_check(obj: &dyn Objective, x: &Point, h: f64) -> Result<f64, CalculusError> {
    let m = obj.manifold();
    let g = obj.gradient(x)?;
    let scale = m.norm(&g).max(1e-12);
    let mut worst: f64 = 0.0;
    for e in m.tangent_basis(x) {
        let fp = value_at(obj, x, &e, h)?;
        let fm = value_at(obj, x, &e, -h)?;
        let fd = (fp - fm) / (2.0 * h);
        let an = m.inner(x, &g, &e)?;
        worst = worst.max((fd - an).abs() / scale);
    }
    Ok(worst)
}

/// `[f(exp(x, h v)) - 2 f(x) + f(exp(x, -h v))] / h^2` for a unit vector `v`.
pub fn second_directional_derivative(
    obj: &dyn Objective,
    x: &Point,
    v: &Tangent,
    h: f64,
) -> Result<f64, CalculusError> {
    let f0 = obj.value(x);
    if !f0.is_finite() {
        return Err(CalculusError::DomainExit);
    }
    let fp = value_at(obj, x, v, h)?;
    let fm = value_at(obj, x, v, -h)?;
    Ok((fp - 2.0 * f0 + fm) / (h * h))
}
