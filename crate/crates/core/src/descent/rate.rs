use super::IterateTrace;
use crate::geometry::{GeometryError, Point};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of iterations before a rate fit is attempted.
pub const MIN_ITERATIONS: usize = 8;
/// Minimum number of distances inside the fitting window.
pub const MIN_WINDOW: usize = 5;
/// Distances at or below this are treated as numerical zero.
pub const ZERO_DISTANCE: f64 = 1e2 * f64::EPSILON;
/// Minimum coefficient of determination for a linear-rate verdict.
pub const LINEAR_R2: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("need at least {needed} usable points, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("iterates are numerically at the limit point; shrink the window")]
    ZeroDistance,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Least-squares fit of `d(x_k, x*) ~ mu rho^k` over `window` (inclusive
/// start, exclusive end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub mu: f64,
    pub rho: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
    /// Ratio of the log-rates fitted on the second and first halves of the
    /// window. Close to 1 for a geometric sequence, well below 1 when the
    /// rate degrades (sublinear convergence).
    pub half_window_ratio: f64,
}

impl RateFit {
    pub fn is_linear(&self) -> bool {
        self.rho < 1.0 && self.r_squared >= LINEAR_R2 && (0.8..=1.25).contains(&self.half_window_ratio)
    }
}

fn least_squares(ks: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ks.len() as f64;
    let mk = ks.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ks.iter().zip(ys).map(|(k, y)| (k - mk) * (y - my)).sum();
    let sxx: f64 = ks.iter().map(|k| (k - mk).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mk;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = ks.iter().zip(ys).map(|(k, y)| (y - intercept - slope * k).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 0.0 };
    (slope, intercept, r2)
}

/// Fits a linear rate to a distance sequence `d_k`, `k = 0, 1, ...`, over
/// the trailing `tail_fraction` of its indices.
pub fn fit_distances(distances: &[f64], tail_fraction: f64) -> Result<RateFit, RateError> {
    let n = distances.len();
    let start = ((n as f64) * (1.0 - tail_fraction.clamp(0.0, 1.0))).floor() as usize;
    let mut ks = Vec::new();
    let mut ys = Vec::new();
    let mut zeros = 0;
    for (k, &d) in distances.iter().enumerate().skip(start) {
        if d > ZERO_DISTANCE {
            ks.push(k as f64);
            ys.push(d.ln());
        } else {
            zeros += 1;
        }
    }
    if ks.len() < MIN_WINDOW {
        return Err(if zeros > 0 {
            RateError::ZeroDistance
        } else {
            RateError::InsufficientData { needed: MIN_WINDOW, available: ks.len() }
        });
    }
    let (slope, intercept, r_squared) = least_squares(&ks, &ys);
    let h = ks.len() / 2;
    let (s1, _, _) = least_squares(&ks[..h.max(2)], &ys[..h.max(2)]);
    let (s2, _, _) = least_squares(&ks[h..], &ys[h..]);
    let half_window_ratio = if s1 != 0.0 { s2 / s1 } else { f64::NAN };
    Ok(RateFit {
        mu: intercept.exp(),
        rho: slope.exp(),
        r_squared,
        window: (ks[0] as usize, *ks.last().unwrap() as usize + 1),
        half_window_ratio,
    })
}

/// Distances below this multiple of the last step are dropped when the final
/// iterate stands in for the limit point: at that scale they measure the
/// error of the reference rather than of `x_k`.
pub const REFERENCE_NOISE_FACTOR: f64 = 10.0;

/// Fits `d(x_k, x*) <= mu rho^k` on the tail of a trace. `x_star` defaults to
/// the final iterate, which is always excluded from the window together with
/// the iterates within [`REFERENCE_NOISE_FACTOR`] last steps of it.
pub fn estimate_linear_rate(
    trace: &IterateTrace,
    x_star: Option<&Point>,
    tail_fraction: f64,
) -> Result<RateFit, RateError> {
    if trace.iterations() < MIN_ITERATIONS {
        return Err(RateError::InsufficientData { needed: MIN_ITERATIONS, available: trace.iterations() });
    }
    let m = trace.manifold;
    let star = x_star.cloned().unwrap_or_else(|| trace.final_point());
    let last = trace.records.len() - 1;
    let mut distances = (0..last).map(|k| m.dist(&trace.point(k), &star)).collect::<Result<Vec<_>, _>>()?;
    if x_star.is_none() {
        let floor = REFERENCE_NOISE_FACTOR * distances[last - 1];
        while distances.last().is_some_and(|&d| d < floor) {
            distances.pop();
        }
    }
    fit_distances(&distances, tail_fraction)
}

/// `d^2(x_{k+1}, z) <= d^2(x_k, z) + eps_k + 1e-9` for every transition.
///
/// With `eps = None` the default `eps_k = 2 R t_k |grad f(x_k)|^2` is used.
pub fn quasi_fejer_check(trace: &IterateTrace, z: &Point, eps: Option<&[f64]>) -> Result<bool, QuasiFejerError> {
    let m = trace.manifold;
    let steps: Vec<(f64, f64)> = trace.transitions().collect();
    let eps: Vec<f64> = match eps {
        Some(e) => {
            if e.len() != trace.iterations() {
                return Err(QuasiFejerError::LengthMismatch { expected: trace.iterations(), got: e.len() });
            }
            e.to_vec()
        }
        None => steps.iter().map(|(t, g)| 2.0 * trace.cap_r * t * g * g).collect(),
    };
    let d2 = |k: usize| m.dist(&trace.point(k), z).map(|d| d * d);
    let mut prev = d2(0)?;
    for (k, e) in eps.iter().enumerate() {
        let next = d2(k + 1)?;
        if next > prev + e + 1e-9 {
            return Ok(false);
        }
        prev = next;
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuasiFejerError {
    #[error("eps has {got} entries, trace has {expected} transitions")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
