//! Closed-form Riemannian geometry for four backends: Euclidean space,
//! the unit sphere, the hyperboloid model of hyperbolic space and the cone of
//! symmetric positive definite matrices with the affine-invariant metric.
//!
//! Points and tangent vectors are stored in ambient coordinates and carry the
//! backend they belong to. Every operation that produces a point projects the
//! result back onto the constraint set, so drift does not accumulate along
//! long iterations.

mod euclidean;
mod hyperbolic;
mod sampling;
mod spd;
mod sphere;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub use sampling::{random_point, random_point_with, random_tangent, random_tangent_with, sample_rng};

/// Tolerance used when validating externally supplied points.
pub const POINT_TOL: f64 = 1e-9;

/// Tolerance on the tangency residual of externally supplied vectors.
pub const TANGENT_TOL: f64 = 1e-12;

/// Sphere log is refused beyond this distance from the antipode.
pub const ANTIPODE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("points live on different manifolds ({0} vs {1})")]
    ManifoldMismatch(Manifold, Manifold),
    #[error("expected {expected} ambient coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinates violate the point constraint of {manifold}: {reason}")]
    InvalidPoint { manifold: Manifold, reason: String },
    #[error("vector is not tangent at its base point (residual {residual:e})")]
    TangencyViolation { residual: f64 },
    #[error("tangent vectors are based at different points")]
    BaseMismatch,
    #[error("distance {distance} is outside the injectivity radius {radius}")]
    OutsideInjectivityRadius { distance: f64, radius: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Backend tag. `dim` is the intrinsic dimension, except for `Spd` where `n`
/// is the matrix size (intrinsic dimension `n(n+1)/2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Manifold {
    Euclidean { dim: usize },
    Sphere { dim: usize },
    Hyperbolic { dim: usize },
    Spd { n: usize },
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Euclidean { dim } => write!(f, "R^{dim}"),
            Manifold::Sphere { dim } => write!(f, "S^{dim}"),
            Manifold::Hyperbolic { dim } => write!(f, "H^{dim}"),
            Manifold::Spd { n } => write!(f, "SPD({n})"),
        }
    }
}

/// A point on a manifold, in ambient coordinates.
///
/// Unit vector in `R^{n+1}` for the sphere, a vector with Minkowski norm `-1`
/// and positive time coordinate (index 0) for the hyperboloid, and a
/// row-major symmetric positive definite matrix for `Spd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    manifold: Manifold,
    coords: Vec<f64>,
}

impl Point {
    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Canonical base point: the origin, the north pole `e_0`, the hyperboloid
    /// vertex or the identity matrix.
    pub fn origin(manifold: Manifold) -> Point {
        let mut coords = vec![0.0; manifold.ambient_len()];
        match manifold {
            Manifold::Euclidean { .. } => {}
            Manifold::Sphere { .. } | Manifold::Hyperbolic { .. } => coords[0] = 1.0,
            Manifold::Spd { n } => {
                for i in 0..n {
                    coords[i * n + i] = 1.0;
                }
            }
        }
        Point { manifold, coords }
    }

    pub(crate) fn from_raw(manifold: Manifold, coords: Vec<f64>) -> Point {
        Point { manifold, coords }
    }

    fn approx_eq(&self, other: &Point) -> bool {
        self.manifold == other.manifold
            && self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())))
    }
}

/// A tangent vector, stored in ambient coordinates together with its base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    base: Point,
    coords: Vec<f64>,
}

impl Tangent {
    pub fn zero(base: &Point) -> Tangent {
        Tangent { coords: vec![0.0; base.coords.len()], base: base.clone() }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn scale(&self, s: f64) -> Tangent {
        Tangent { base: self.base.clone(), coords: self.coords.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Tangent) -> Result<Tangent> {
        if !self.base.approx_eq(&other.base) {
            return Err(GeometryError::BaseMismatch);
        }
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(Tangent { base: self.base.clone(), coords })
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }
}

/// Sectional curvature bounds `kappa_lo <= K <= kappa_hi` on a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub kappa_lo: f64,
    pub kappa_hi: f64,
}

/// Closed geodesic ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Ball {
        assert!(radius >= 0.0, "ball radius must be nonnegative");
        Ball { center, radius }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Manifold {
    /// Number of stored coordinates per point.
    pub fn ambient_len(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } => dim,
            Manifold::Sphere { dim } | Manifold::Hyperbolic { dim } => dim + 1,
            Manifold::Spd { n } => n * n,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } | Manifold::Sphere { dim } | Manifold::Hyperbolic { dim } => dim,
            Manifold::Spd { n } => n * (n + 1) / 2,
        }
    }

    /// Complete, simply connected and nonpositively curved.
    pub fn is_hadamard(&self) -> bool {
        !matches!(self, Manifold::Sphere { .. })
    }

    /// Validates `coords` against the point constraint (to [`POINT_TOL`]) and
    /// returns the projected point.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        self.check_len(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(self.invalid("non-finite coordinate"));
        }
        match self {
            Manifold::Euclidean { .. } => {}
            Manifold::Sphere { .. } => {
                let n = norm2(&coords);
                if (n - 1.0).abs() > POINT_TOL {
                    return Err(self.invalid(format!("euclidean norm {n} is not 1")));
                }
            }
            Manifold::Hyperbolic { .. } => {
                let q = hyperbolic::minkowski(&coords, &coords);
                if (q + 1.0).abs() > POINT_TOL * (1.0 + coords[0] * coords[0]) || coords[0] <= 0.0 {
                    return Err(self.invalid(format!("minkowski form {q} is not -1 on the upper sheet")));
                }
            }
            Manifold::Spd { n } => spd::check_point(*n, &coords).map_err(|r| self.invalid(r))?,
        }
        self.project(coords)
    }

    /// Projects arbitrary ambient coordinates onto the constraint set: sphere
    /// points are normalised, hyperboloid points have their time coordinate
    /// recomputed from the spatial part, SPD matrices are symmetrised.
    pub fn project(&self, mut coords: Vec<f64>) -> Result<Point> {
        self.check_len(coords.len())?;
        match *self {
            Manifold::Euclidean { .. } => {}
            Manifold::Sphere { .. } => {
                let n = norm2(&coords);
                if n == 0.0 || !n.is_finite() {
                    return Err(self.invalid("cannot normalise a zero vector"));
                }
                coords.iter_mut().for_each(|c| *c /= n);
            }
            Manifold::Hyperbolic { .. } => hyperbolic::renormalize(&mut coords),
            Manifold::Spd { n } => {
                spd::symmetrize(n, &mut coords);
                spd::check_point(n, &coords).map_err(|r| self.invalid(r))?;
            }
        }
        Ok(Point { manifold: *self, coords })
    }

    /// Builds a tangent vector at `x`, rejecting vectors whose tangency
    /// residual exceeds [`TANGENT_TOL`].
    pub fn tangent(&self, x: &Point, coords: Vec<f64>) -> Result<Tangent> {
        self.check_point(x)?;
        self.check_len(coords.len())?;
        let residual = self.tangency_residual(x, &coords);
        let scale = 1.0 + norm2(&x.coords) * norm2(&coords);
        if residual > TANGENT_TOL * scale {
            return Err(GeometryError::TangencyViolation { residual });
        }
        Ok(Tangent { base: x.clone(), coords })
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    pub fn project_tangent(&self, x: &Point, mut coords: Vec<f64>) -> Tangent {
        match *self {
            Manifold::Euclidean { .. } => {}
            Manifold::Sphere { .. } => {
                let c = dot(&x.coords, &coords);
                coords.iter_mut().zip(&x.coords).for_each(|(v, xi)| *v -= c * xi);
            }
            Manifold::Hyperbolic { .. } => {
                let c = hyperbolic::minkowski(&x.coords, &coords);
                coords.iter_mut().zip(&x.coords).for_each(|(v, xi)| *v += c * xi);
            }
            Manifold::Spd { n } => spd::symmetrize(n, &mut coords),
        }
        Tangent { base: x.clone(), coords }
    }

    pub fn tangency_residual(&self, x: &Point, coords: &[f64]) -> f64 {
        match *self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Sphere { .. } => dot(&x.coords, coords).abs(),
            Manifold::Hyperbolic { .. } => hyperbolic::minkowski(&x.coords, coords).abs(),
            Manifold::Spd { n } => spd::asymmetry(n, coords),
        }
    }

    pub fn dist(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match *self {
            Manifold::Euclidean { .. } => euclidean::dist(&x.coords, &y.coords),
            Manifold::Sphere { .. } => sphere::dist(&x.coords, &y.coords),
            Manifold::Hyperbolic { .. } => hyperbolic::dist(&x.coords, &y.coords),
            Manifold::Spd { n } => spd::dist(n, &x.coords, &y.coords)?,
        })
    }

    pub fn exp(&self, x: &Point, v: &Tangent) -> Result<Point> {
        self.check_based_at(x, v)?;
        let coords = match *self {
            Manifold::Euclidean { .. } => euclidean::exp(&x.coords, &v.coords),
            Manifold::Sphere { .. } => sphere::exp(&x.coords, &v.coords),
            Manifold::Hyperbolic { .. } => hyperbolic::exp(&x.coords, &v.coords),
            Manifold::Spd { n } => spd::exp(n, &x.coords, &v.coords)?,
        };
        self.project(coords)
    }

    /// Inverse exponential map `exp_x^{-1} y`.
    pub fn log(&self, x: &Point, y: &Point) -> Result<Tangent> {
        self.check_point(x)?;
        self.check_point(y)?;
        let coords = match *self {
            Manifold::Euclidean { .. } => euclidean::log(&x.coords, &y.coords),
            Manifold::Sphere { .. } => sphere::log(&x.coords, &y.coords)?,
            Manifold::Hyperbolic { .. } => hyperbolic::log(&x.coords, &y.coords),
            Manifold::Spd { n } => spd::log(n, &x.coords, &y.coords)?,
        };
        Ok(self.project_tangent(x, coords))
    }

    /// Parallel transport of `v` from `x` to `y` along the minimal geodesic.
    pub fn parallel_transport(&self, x: &Point, y: &Point, v: &Tangent) -> Result<Tangent> {
        self.check_based_at(x, v)?;
        self.check_point(y)?;
        let coords = match *self {
            Manifold::Euclidean { .. } => v.coords.clone(),
            Manifold::Sphere { .. } => sphere::transport(&x.coords, &y.coords, &v.coords)?,
            Manifold::Hyperbolic { .. } => hyperbolic::transport(&x.coords, &y.coords, &v.coords),
            Manifold::Spd { n } => spd::transport(n, &x.coords, &y.coords, &v.coords)?,
        };
        Ok(self.project_tangent(y, coords))
    }

    /// Riemannian metric at `x`.
    pub fn inner(&self, x: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        self.check_based_at(x, u)?;
        self.check_based_at(x, v)?;
        Ok(self.inner_unchecked(x, &u.coords, &v.coords))
    }

    pub fn norm(&self, v: &Tangent) -> f64 {
        self.inner_unchecked(&v.base, &v.coords, &v.coords).max(0.0).sqrt()
    }

    pub(crate) fn inner_unchecked(&self, x: &Point, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Manifold::Euclidean { .. } | Manifold::Sphere { .. } => dot(u, v),
            Manifold::Hyperbolic { .. } => hyperbolic::minkowski(u, v),
            Manifold::Spd { n } => spd::inner(n, &x.coords, u, v),
        }
    }

    /// Global sectional-curvature bounds of the backend; the region only
    /// matters for manifolds with variable curvature, which these are not.
    pub fn curvature_bounds(&self, _region: &Ball) -> CurvatureBounds {
        let (kappa_lo, kappa_hi) = match self {
            Manifold::Euclidean { .. } => (0.0, 0.0),
            Manifold::Sphere { .. } => (1.0, 1.0),
            Manifold::Hyperbolic { .. } => (-1.0, -1.0),
            Manifold::Spd { .. } => (-0.5, 0.0),
        };
        CurvatureBounds { kappa_lo, kappa_hi }
    }

    pub fn injectivity_radius(&self, _x: &Point) -> f64 {
        match self {
            Manifold::Sphere { .. } => std::f64::consts::PI,
            _ => f64::INFINITY,
        }
    }

    pub fn convexity_radius(&self, _x: &Point) -> f64 {
        match self {
            Manifold::Sphere { .. } => std::f64::consts::FRAC_PI_2,
            _ => f64::INFINITY,
        }
    }

    /// Orthonormal basis of `T_x M` with respect to the metric at `x`.
    pub fn tangent_basis(&self, x: &Point) -> Vec<Tangent> {
        let raw: Vec<Vec<f64>> = match *self {
            Manifold::Euclidean { dim } => (0..dim)
                .map(|i| {
                    let mut e = vec![0.0; dim];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            Manifold::Sphere { .. } => sphere::basis(&x.coords),
            Manifold::Hyperbolic { .. } => hyperbolic::basis(&x.coords),
            Manifold::Spd { n } => spd::basis(n, &x.coords),
        };
        raw.into_iter().map(|c| Tangent { base: x.clone(), coords: c }).collect()
    }

    /// Weighted mean in ambient coordinates, projected back onto the
    /// manifold. A cheap starting point, not a Riemannian center.
    pub fn extrinsic_mean(&self, points: &[Point], weights: &[f64]) -> Result<Point> {
        let mut acc = vec![0.0; self.ambient_len()];
        for (p, &w) in points.iter().zip(weights) {
            self.check_point(p)?;
            acc.iter_mut().zip(&p.coords).for_each(|(a, c)| *a += w * c);
        }
        if let Manifold::Hyperbolic { .. } = self {
            // the time coordinate is recomputed by `project`
            let q = -hyperbolic::minkowski(&acc, &acc);
            if q > 0.0 {
                let s = q.sqrt();
                acc.iter_mut().for_each(|a| *a /= s);
            }
        }
        self.project(acc)
    }

    pub(crate) fn check_point(&self, x: &Point) -> Result<()> {
        if x.manifold != *self {
            return Err(GeometryError::ManifoldMismatch(*self, x.manifold));
        }
        Ok(())
    }

    fn check_based_at(&self, x: &Point, v: &Tangent) -> Result<()> {
        self.check_point(x)?;
        if !v.base.approx_eq(x) {
            return Err(GeometryError::BaseMismatch);
        }
        Ok(())
    }

    fn check_len(&self, got: usize) -> Result<()> {
        let expected = self.ambient_len();
        if got != expected {
            return Err(GeometryError::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    fn invalid(&self, reason: impl Into<String>) -> GeometryError {
        GeometryError::InvalidPoint { manifold: *self, reason: reason.into() }
    }
}

#[cfg(test)]
mod tests;
