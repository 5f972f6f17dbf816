//! Geodesic gradient descent: `x_{k+1} = exp_{x_k}(-t_k grad f(x_k))`.
//!
//! [`gradient_descent`] selects `t_k` with a [`StepRule`]; with the Armijo or a
//! validated external rule every transition satisfies sufficient decrease.
//! [`constant_step_descent`] uses a fixed `t_0` and enforces nothing during
//! the run, stopping with [`TerminalStatus::ValueIncrease`] as soon as the
//! objective goes up by more than round-off.

mod rate;
mod trace;

pub use rate::{
    estimate_linear_rate, fit_distances, quasi_fejer_check, QuasiFejerError, RateError, RateFit, LINEAR_R2, REFERENCE_NOISE_FACTOR,
    MIN_ITERATIONS, MIN_WINDOW,
};
pub use trace::{read_trace_csv, IterateRecord, IterateTrace, TerminalStatus, TraceCsvRow};

use crate::calculus::{Objective, ObjectiveError};
use crate::geometry::{Point, Tangent};
use crate::stepsize::{armijo_search, StepError, StepRule, DECREASE_SLACK};
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

/// Iterations without a new lowest value or a new smallest gradient norm
/// after which a run is declared [`TerminalStatus::Stalled`].
pub const STALL_WINDOW: usize = 25;

/// Relative change in `f` that is indistinguishable from round-off.
fn roundoff(f: f64) -> f64 {
    8.0 * f64::EPSILON * f.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub grad_tol: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub point_tol: Option<f64>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria { grad_tol: 1e-10, max_iters: 100_000, point_tol: None }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<(), DescentError> {
        if !(self.grad_tol > 0.0) || self.max_iters < 1 {
            return Err(DescentError::InvalidStop(format!(
                "need grad_tol > 0 and max_iters >= 1, got {} and {}",
                self.grad_tol, self.max_iters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescentError {
    #[error("starting point is outside the domain (f(x0) = {0})")]
    InvalidStart(f64),
    #[error("invalid stopping criteria: {0}")]
    InvalidStop(String),
    #[error(transparent)]
    InvalidRule(#[from] StepError),
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}

struct Recorder {
    records: Vec<IterateRecord>,
}

impl Recorder {
    fn push(&mut self, x: &Point, value: f64, grad_norm: Option<f64>, step: Option<f64>) {
        let k = self.records.len();
        self.records.push(IterateRecord { k, point: x.coords().to_vec(), value, grad_norm, step });
    }
}

enum Outcome {
    Stop(TerminalStatus, Option<String>),
    Move { t: f64, point: Point, value: f64 },
}

/// Runs descent from `x0` until a stopping criterion fires.
///
/// Failures during the run (undefined gradient, exhausted line search,
/// rejected external step) end the trace with the matching status instead of
/// discarding it.
pub fn gradient_descent(
    obj: &dyn Objective,
    x0: &Point,
    rule: &StepRule,
    stop: &StopCriteria,
) -> Result<IterateTrace, DescentError> {
    rule.validate()?;
    stop.validate()?;
    let f0 = obj.value(x0);
    if !f0.is_finite() {
        return Err(DescentError::InvalidStart(f0));
    }
    let m = obj.manifold();
    let clock = Stopwatch::start();
    let mut rec = Recorder { records: Vec::new() };
    let mut x = x0.clone();
    let mut fx = f0;
    let (mut best_f, mut best_g, mut idle) = (f64::INFINITY, f64::INFINITY, 0);
    let (status, detail) = loop {
        let g = match obj.gradient(&x) {
            Ok(g) => g,
            Err(e) => {
                rec.push(&x, fx, None, None);
                break (TerminalStatus::NondifferentiableIterate, Some(e.to_string()));
            }
        };
        let gn = m.norm(&g);
        if gn <= stop.grad_tol {
            rec.push(&x, fx, Some(gn), None);
            break (TerminalStatus::GradientTolReached, None);
        }
        if rec.records.len() >= stop.max_iters {
            rec.push(&x, fx, Some(gn), None);
            break (TerminalStatus::MaxIters, None);
        }
        if fx < best_f || gn < best_g {
            best_f = best_f.min(fx);
            best_g = best_g.min(gn);
            idle = 0;
        } else {
            idle += 1;
            if idle >= STALL_WINDOW {
                rec.push(&x, fx, Some(gn), None);
                break (TerminalStatus::Stalled, Some(format!("no progress in f or |grad f| for {idle} iterations")));
            }
        }
        let k = rec.records.len();
        match take_step(obj, rule, k, &x, fx, &g) {
            Outcome::Stop(status, detail) => {
                rec.push(&x, fx, Some(gn), None);
                break (status, detail);
            }
            Outcome::Move { t, point, value } => {
                rec.push(&x, fx, Some(gn), Some(t));
                let increased = !(value <= fx + roundoff(fx));
                let small_move = match stop.point_tol {
                    Some(tol) => m.dist(&x, &point).is_ok_and(|d| d <= tol),
                    None => false,
                };
                x = point;
                fx = value;
                if increased && matches!(rule, StepRule::Constant { .. }) {
                    let gn = obj.gradient(&x).ok().map(|g| m.norm(&g));
                    rec.push(&x, fx, gn, None);
                    break (TerminalStatus::ValueIncrease, Some(format!("f increased at step {k}")));
                }
                if small_move {
                    let gn = obj.gradient(&x).ok().map(|g| m.norm(&g));
                    rec.push(&x, fx, gn, None);
                    break (TerminalStatus::PointTolReached, None);
                }
            }
        }
    };
    Ok(IterateTrace {
        manifold: m,
        records: rec.records,
        status,
        status_detail: detail,
        beta: rule.beta(),
        cap_r: rule.cap(),
        wall_time: clock.elapsed(),
    })
}

fn take_step(obj: &dyn Objective, rule: &StepRule, k: usize, x: &Point, fx: f64, g: &Tangent) -> Outcome {
    let m = obj.manifold();
    let moved = |t: f64| -> Result<(Point, f64), ObjectiveError> {
        let y = m.exp(x, &g.scale(-t))?;
        let fy = obj.value(&y);
        Ok((y, fy))
    };
    match rule {
        StepRule::Armijo { beta, max_halvings, .. } => match armijo_search(obj, x, g, *beta, *max_halvings) {
            Ok(s) => Outcome::Move { t: s.t, point: s.point, value: s.value },
            Err(e) => Outcome::Stop(TerminalStatus::StepFailure, Some(e.to_string())),
        },
        StepRule::Constant { t0 } => match moved(*t0) {
            Ok((point, value)) => Outcome::Move { t: *t0, point, value },
            Err(e) => Outcome::Stop(TerminalStatus::StepFailure, Some(e.to_string())),
        },
        StepRule::External { supplier, beta, cap_r, validate } => {
            let t = supplier.step(k, x, g, fx);
            if !(t > 0.0 && t <= *cap_r) {
                let e = StepError::Rejected { t, reason: format!("outside (0, {cap_r}]") };
                return Outcome::Stop(TerminalStatus::StepFailure, Some(e.to_string()));
            }
            let (point, value) = match moved(t) {
                Ok(r) => r,
                Err(e) => return Outcome::Stop(TerminalStatus::StepFailure, Some(e.to_string())),
            };
            let g2 = m.norm(g).powi(2);
            if *validate && !(value <= fx - beta * t * g2 + DECREASE_SLACK) {
                let e = StepError::Rejected { t, reason: "no sufficient decrease".into() };
                return Outcome::Stop(TerminalStatus::StepFailure, Some(e.to_string()));
            }
            Outcome::Move { t, point, value }
        }
    }
}

/// Fixed-step descent `x_{k+1} = exp_{x_k}(-t0 grad f(x_k))`.
pub fn constant_step_descent(
    obj: &dyn Objective,
    x0: &Point,
    t0: f64,
    stop: &StopCriteria,
) -> Result<IterateTrace, DescentError> {
    gradient_descent(obj, x0, &StepRule::constant(t0)?, stop)
}

/// Decrease constant implied by a constant step below `2 / lambda`, where
/// `lambda` bounds the Hessian on the sub-level set: `1 - t0 lambda / 2`.
pub fn implied_beta(t0: f64, lambda: f64) -> Option<f64> {
    let beta = 1.0 - t0 * lambda / 2.0;
    (beta > 0.0 && beta < 1.0).then_some(beta)
}
