use super::{fp_value, FrechetError, MassProblem};
use crate::calculus::{second_directional_derivative, CalculusError, FD_STEP_SECOND};
use crate::geometry::{random_point_with, random_tangent_with, sample_rng, Ball, Point};
use crate::numeric::map_indexed;
use serde::{Deserialize, Serialize};

/// Default number of accepted sample points.
pub const LAMBDA_SAMPLES: usize = 256;
/// Random unit directions per sample point.
const DIRECTIONS: usize = 8;
/// Multiplier applied to the largest sampled second derivative.
pub const LAMBDA_SAFETY: f64 = 1.1;
/// Give up on rejection sampling after this many candidates per requested
/// sample.
const MAX_ATTEMPTS_PER_SAMPLE: usize = 64;
/// For `p < 2`, sample points closer than this to a data point are redrawn:
/// the second-difference stencil is unreliable next to the singularity.
const NEAR_DATA: f64 = 10.0 * FD_STEP_SECOND;

/// Estimate of the largest Hessian eigenvalue of `f_p` on the sub-level set
/// `{f_p <= f_p(x0)}`.
///
/// This is a sampled estimate, not a certificate, unless `value` came from
/// `closed_form`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub value: f64,
    /// Largest sampled second directional derivative times [`LAMBDA_SAFETY`].
    pub sampled: f64,
    /// Comparison bound `sqrt|k| D coth(sqrt|k| D)` for `p = 2` on Hadamard
    /// backends, with `D` bounding the distance from the sub-level set to the
    /// data.
    pub closed_form: Option<f64>,
    /// Points used (the start plus accepted samples).
    pub points: usize,
    pub attempts: usize,
    /// Candidates redrawn for being too close to a data point.
    pub resampled: usize,
}

fn near_data(prob: &MassProblem, z: &Point) -> bool {
    prob.p < 2.0 && prob.distances(z).map_or(true, |d| d.iter().any(|&di| di <= NEAR_DATA))
}

/// Samples `samples` points of the sub-level set of `x0` by rejection from a
/// ball around the anchor that contains it, and takes the largest second
/// directional derivative along random unit directions.
pub fn lambda_p_estimate(prob: &MassProblem, x0: &Point, samples: usize, seed: u64) -> Result<LambdaEstimate, FrechetError> {
    let m = prob.manifold();
    let f0 = fp_value(prob, x0);
    if !f0.is_finite() {
        return Err(FrechetError::OutsideDomain);
    }
    let o = &prob.anchor;
    let r_data = prob.data.points().iter().map(|y| m.dist(o, y)).try_fold(0.0f64, |a, d| d.map(|d| a.max(d)))?;
    // sum_i w_i d(z, y_i) <= (p f_p(z))^{1/p}, so the sub-level set sits in
    // B(o, r_data + (p f0)^{1/p}).
    let radius = prob.rho.min(r_data + (prob.p * f0).powf(1.0 / prob.p));
    let region = Ball::new(o.clone(), radius);

    let mut points = Vec::new();
    let mut resampled = 0;
    if near_data(prob, x0) {
        resampled += 1;
    } else {
        points.push(x0.clone());
    }
    let max_attempts = MAX_ATTEMPTS_PER_SAMPLE * samples;
    let mut attempts = 0;
    while points.len() < samples + 1 && attempts < max_attempts {
        let batch = samples.min(max_attempts - attempts);
        let base = attempts;
        let drawn = map_indexed(batch, |j| {
            let mut rng = sample_rng(seed, (base + j) as u64);
            let z = random_point_with(&region, &mut rng);
            let keep = fp_value(prob, &z) <= f0;
            let near = keep && near_data(prob, &z);
            (z, keep, near)
        });
        attempts += batch;
        for (z, keep, near) in drawn {
            if near {
                resampled += 1;
            } else if keep && points.len() < samples + 1 {
                points.push(z);
            }
        }
    }

    let maxima = map_indexed(points.len(), |i| -> Result<f64, FrechetError> {
        let z = &points[i];
        let mut rng = sample_rng(seed.wrapping_add(1), i as u64);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..DIRECTIONS {
            let v = random_tangent_with(z, 1.0, &mut rng);
            let n = m.norm(&v);
            if n == 0.0 {
                continue;
            }
            match second_directional_derivative(prob, z, &v.scale(1.0 / n), FD_STEP_SECOND) {
                Ok(d2) => best = best.max(d2),
                Err(CalculusError::DomainExit) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(best)
    });
    let mut largest = f64::NEG_INFINITY;
    for v in maxima {
        largest = largest.max(v?);
    }
    if largest == f64::NEG_INFINITY {
        return Err(FrechetError::InvalidProblem("no usable sample point for the Hessian estimate".into()));
    }
    let sampled = LAMBDA_SAFETY * largest;

    let closed_form = (prob.p == 2.0 && m.is_hadamard()).then(|| {
        let kappa = m.curvature_bounds(&region).kappa_lo;
        let reach = radius + r_data;
        let s = kappa.abs().sqrt() * reach;
        if s == 0.0 {
            1.0
        } else {
            s / s.tanh()
        }
    });
    let value = closed_form.map_or(sampled, |c| c.min(sampled));
    Ok(LambdaEstimate { value, sampled, closed_form, points: points.len(), attempts, resampled })
}
