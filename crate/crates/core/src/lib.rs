//! Riemannian gradient descent on closed-form manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: exp, log, distance and parallel transport on Euclidean
//!   space, spheres, hyperbolic space and SPD matrices.
//! * [`calculus`]: objectives, finite-difference checks and numerical probes
//!   for geodesic convexity and sharp minima.
//! * [`stepsize`]: sufficient-decrease test, Armijo backtracking and
//!   constant steps.
//! * [`descent`]: the iteration drivers, iterate traces and rate fitting.
//! * [`frechet`]: the weighted L^p center-of-mass problem and its solver.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod descent;
pub mod frechet;
pub mod geometry;
mod numeric;
#[cfg(test)]
mod testutil;
pub mod stepsize;

pub use geometry::{Ball, CurvatureBounds, GeometryError, Manifold, Point, Tangent};
pub use numeric::ext_real;
