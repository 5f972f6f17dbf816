//! Step-size policies for geodesic gradient descent.
//!
//! Every accepted step `t` along `gamma(t) = exp_x(-t grad f(x))` must satisfy
//! the sufficient-decrease condition
//! `f(gamma(t)) <= f(x) - beta t |grad f(x)|^2`. The Armijo rule returns the
//! largest `2^{-i}`, `i = 0, 1, 2, ...` that does.

use crate::calculus::{Objective, ObjectiveError};
use crate::geometry::{GeometryError, Point, Tangent};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Slack on the right-hand side of the sufficient-decrease test.
pub const DECREASE_SLACK: f64 = 1e-12;
pub const DEFAULT_MAX_HALVINGS: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("gradient vanishes; no descent direction")]
    ZeroGradient,
    #[error("no sufficient decrease after {trials} trial steps")]
    ExhaustedHalvings { trials: u32 },
    #[error("all {trials} trial points left the domain")]
    DomainExit { trials: u32 },
    #[error("invalid step rule parameter: {0}")]
    InvalidParameter(String),
    #[error("externally supplied step {t} rejected: {reason}")]
    Rejected { t: f64, reason: String },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Supplies step sizes for [`StepRule::External`]. Implementations are shared
/// across runs, so they must be re-entrant.
pub trait StepSupplier: Send + Sync {
    fn step(&self, k: usize, x: &Point, grad: &Tangent, value: f64) -> f64;
}

#[derive(Clone)]
pub enum StepRule {
    Armijo { beta: f64, cap_r: f64, max_halvings: u32 },
    Constant { t0: f64 },
    External { supplier: Arc<dyn StepSupplier>, beta: f64, cap_r: f64, validate: bool },
}

impl fmt::Debug for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Armijo { beta, cap_r, max_halvings } => f
                .debug_struct("Armijo")
                .field("beta", beta)
                .field("cap_r", cap_r)
                .field("max_halvings", max_halvings)
                .finish(),
            StepRule::Constant { t0 } => f.debug_struct("Constant").field("t0", t0).finish(),
            StepRule::External { beta, cap_r, validate, .. } => f
                .debug_struct("External")
                .field("beta", beta)
                .field("cap_r", cap_r)
                .field("validate", validate)
                .finish_non_exhaustive(),
        }
    }
}

fn check_beta(beta: f64) -> Result<(), StepError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(StepError::InvalidParameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(())
}

fn check_cap(cap_r: f64) -> Result<(), StepError> {
    if !(cap_r >= 1.0) {
        return Err(StepError::InvalidParameter(format!("R must be at least 1, got {cap_r}")));
    }
    Ok(())
}

impl StepRule {
    pub fn armijo(beta: f64) -> Result<StepRule, StepError> {
        check_beta(beta)?;
        Ok(StepRule::Armijo { beta, cap_r: 1.0, max_halvings: DEFAULT_MAX_HALVINGS })
    }

    pub fn constant(t0: f64) -> Result<StepRule, StepError> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(StepError::InvalidParameter(format!("t0 must be positive, got {t0}")));
        }
        Ok(StepRule::Constant { t0 })
    }

    pub fn external(
        supplier: Arc<dyn StepSupplier>,
        beta: f64,
        cap_r: f64,
        validate: bool,
    ) -> Result<StepRule, StepError> {
        check_beta(beta)?;
        check_cap(cap_r)?;
        Ok(StepRule::External { supplier, beta, cap_r, validate })
    }

    /// Re-checks the parameter invariants (useful after building a variant
    /// literally).
    pub fn validate(&self) -> Result<(), StepError> {
        match self {
            StepRule::Armijo { beta, cap_r, .. } | StepRule::External { beta, cap_r, .. } => {
                check_beta(*beta)?;
                check_cap(*cap_r)
            }
            StepRule::Constant { t0 } => StepRule::constant(*t0).map(|_| ()),
        }
    }

    /// Decrease constant `beta`, when the rule carries one.
    pub fn beta(&self) -> Option<f64> {
        match self {
            StepRule::Armijo { beta, .. } | StepRule::External { beta, .. } => Some(*beta),
            StepRule::Constant { .. } => None,
        }
    }

    /// Upper bound `R` on any step the rule may take.
    pub fn cap(&self) -> f64 {
        match self {
            StepRule::Armijo { .. } => 1.0,
            StepRule::Constant { t0 } => t0.max(1.0),
            StepRule::External { cap_r, .. } => *cap_r,
        }
    }
}

/// Result of a successful line search.
#[derive(Debug, Clone)]
pub struct AcceptedStep {
    pub t: f64,
    pub point: Point,
    pub value: f64,
    pub trials: u32,
}

fn trial(obj: &dyn Objective, x: &Point, g: &Tangent, t: f64) -> Result<(Point, f64), StepError> {
    let y = obj.manifold().exp(x, &g.scale(-t))?;
    let fy = obj.value(&y);
    Ok((y, fy))
}

fn decrease_holds(fx: f64, fy: f64, beta: f64, t: f64, g2: f64) -> bool {
    // +inf (outside the domain) and NaN both fail.
    fy <= fx - beta * t * g2 + DECREASE_SLACK
}

/// The search itself only forgives round-off in `f(x)`; an absolute slack
/// would accept clearly non-decreasing steps once `f` drops below it.
fn search_accepts(fx: f64, fy: f64, beta: f64, t: f64, g2: f64) -> bool {
    let slack = (8.0 * f64::EPSILON * fx.abs()).min(DECREASE_SLACK);
    fy <= fx - beta * t * g2 + slack
}

/// `f(exp_x(-t g)) <= f(x) - beta t |g|^2`, up to [`DECREASE_SLACK`].
pub fn sufficient_decrease_check(
    obj: &dyn Objective,
    x: &Point,
    g: &Tangent,
    t: f64,
    beta: f64,
) -> Result<bool, StepError> {
    let m = obj.manifold();
    let g2 = m.norm(g).powi(2);
    if g2 == 0.0 {
        return Err(StepError::ZeroGradient);
    }
    let (_, fy) = trial(obj, x, g, t)?;
    Ok(decrease_holds(obj.value(x), fy, beta, t, g2))
}

/// Armijo backtracking from `t = 1`, halving up to `max_halvings` times.
///
/// Trial points outside the domain count as failed decrease. If every trial
/// left the domain the error is [`StepError::DomainExit`] rather than
/// [`StepError::ExhaustedHalvings`].
pub fn armijo_search(
    obj: &dyn Objective,
    x: &Point,
    g: &Tangent,
    beta: f64,
    max_halvings: u32,
) -> Result<AcceptedStep, StepError> {
    check_beta(beta)?;
    let m = obj.manifold();
    let g2 = m.norm(g).powi(2);
    if g2 == 0.0 {
        return Err(StepError::ZeroGradient);
    }
    let fx = obj.value(x);
    let mut t = 1.0;
    let mut all_outside = true;
    for i in 0..=max_halvings {
        let (y, fy) = trial(obj, x, g, t)?;
        if fy != f64::INFINITY {
            all_outside = false;
        }
        if search_accepts(fx, fy, beta, t, g2) {
            return Ok(AcceptedStep { t, point: y, value: fy, trials: i + 1 });
        }
        t *= 0.5;
    }
    let trials = max_halvings + 1;
    if all_outside {
        Err(StepError::DomainExit { trials })
    } else {
        Err(StepError::ExhaustedHalvings { trials })
    }
}

/// The Armijo step size `max{2^{-i} : sufficient decrease holds}`.
pub fn armijo_step(obj: &dyn Objective, x: &Point, g: &Tangent, beta: f64) -> Result<f64, StepError> {
    armijo_search(obj, x, g, beta, DEFAULT_MAX_HALVINGS).map(|s| s.t)
}

/// `(1 - beta) / (2 L)`: a positive lower bound on Armijo steps when the
/// gradient is `L`-Lipschitz along the iterates.
pub fn step_lower_bound(beta: f64, lipschitz: f64) -> f64 {
    debug_assert!(beta > 0.0 && beta < 1.0 && lipschitz > 0.0);
    (1.0 - beta) / (2.0 * lipschitz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Armijo,
    Constant,
}

/// Serialized step-rule section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRuleConfig {
    pub rule: RuleKind,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: u32,
}

fn default_beta() -> f64 {
    0.5
}

fn default_max_halvings() -> u32 {
    DEFAULT_MAX_HALVINGS
}

impl StepRuleConfig {
    pub fn to_rule(&self) -> Result<StepRule, StepError> {
        match self.rule {
            RuleKind::Armijo => {
                check_beta(self.beta)?;
                Ok(StepRule::Armijo { beta: self.beta, cap_r: 1.0, max_halvings: self.max_halvings })
            }
            RuleKind::Constant => {
                let t0 = self.t0.ok_or_else(|| StepError::InvalidParameter("constant rule needs t0".into()))?;
                StepRule::constant(t0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::FnObjective;
    use crate::geometry::Manifold;
    use approx::assert_abs_diff_eq;

    const R2: Manifold = Manifold::Euclidean { dim: 2 };

    fn half_norm2() -> FnObjective {
        FnObjective::new(
            R2,
            |x| 0.5 * x.coords().iter().map(|c| c * c).sum::<f64>(),
            |x| Ok(R2.project_tangent(x, x.coords().to_vec())),
        )
    }

    fn at(c: [f64; 2]) -> Point {
        R2.point(c.to_vec()).unwrap()
    }

    #[test]
    fn decrease_check_examples() {
        let f = half_norm2();
        let x = at([1.0, 0.0]);
        let g = f.gradient(&x).unwrap();
        assert!(sufficient_decrease_check(&f, &x, &g, 1.0, 0.5).unwrap());
        // 1/2 (0.75)^2 = 0.28125 > 1/2 - 0.9 * 0.25 = 0.275
        assert!(!sufficient_decrease_check(&f, &x, &g, 0.25, 0.9).unwrap());
        assert!(sufficient_decrease_check(&f, &x, &g, 1e-6, 0.99).unwrap());
    }

    #[test]
    fn decrease_check_needs_a_gradient() {
        let f = half_norm2();
        let x = at([0.0, 0.0]);
        let g = Tangent::zero(&x);
        assert_eq!(sufficient_decrease_check(&f, &x, &g, 1.0, 0.5), Err(StepError::ZeroGradient));
    }

    #[test]
    fn armijo_examples() {
        let f = half_norm2();
        let x = at([1.0, 0.0]);
        let g = f.gradient(&x).unwrap();
        assert_eq!(armijo_step(&f, &x, &g, 0.5).unwrap(), 1.0);
        // condition t <= 2(1 - beta) = 0.2: 1, 1/2, 1/4 fail, 1/8 passes
        let s = armijo_search(&f, &x, &g, 0.9, DEFAULT_MAX_HALVINGS).unwrap();
        assert_eq!((s.t, s.trials), (0.125, 4));
        assert_abs_diff_eq!(s.value, 0.5 * 0.875f64.powi(2), epsilon = 1e-16);

        // f linear along the ray: first trial always accepted
        let lin = FnObjective::new(R2, |x| x.coords()[0], |x| Ok(R2.project_tangent(x, vec![1.0, 0.0])));
        let g = lin.gradient(&x).unwrap();
        for beta in [0.1, 0.5, 0.99] {
            assert_eq!(armijo_step(&lin, &x, &g, beta).unwrap(), 1.0);
        }
    }

    #[test]
    fn armijo_is_maximal_and_consistent() {
        let f = FnObjective::new(
            R2,
            |x| x.coords()[0].powi(4) + 3.0 * x.coords()[1].powi(2),
            |x| Ok(R2.project_tangent(x, vec![4.0 * x.coords()[0].powi(3), 6.0 * x.coords()[1]])),
        );
        for (i, beta) in [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
            let x = at([1.0 + 0.3 * i as f64, -0.7 + 0.2 * i as f64]);
            let g = f.gradient(&x).unwrap();
            let t = armijo_step(&f, &x, &g, beta).unwrap();
            assert!(sufficient_decrease_check(&f, &x, &g, t, beta).unwrap());
            if t < 1.0 {
                assert!(!sufficient_decrease_check(&f, &x, &g, 2.0 * t, beta).unwrap());
            }
        }
    }

    #[test]
    fn armijo_failures_are_distinguished() {
        let x = at([1.0, 0.0]);
        // every trial leaves the domain
        let walled = FnObjective::new(
            R2,
            |x| if x.coords()[0] >= 1.0 { x.coords()[0] } else { f64::INFINITY },
            |x| Ok(R2.project_tangent(x, vec![1.0, 0.0])),
        );
        let g = walled.gradient(&x).unwrap();
        assert_eq!(armijo_search(&walled, &x, &g, 0.5, 10).unwrap_err(), StepError::DomainExit { trials: 11 });

        // the gradient lies: the function increases along -g
        let liar = FnObjective::new(R2, |x| -x.coords()[0], |x| Ok(R2.project_tangent(x, vec![1.0, 0.0])));
        let g = liar.gradient(&x).unwrap();
        assert_eq!(
            armijo_search(&liar, &x, &g, 0.5, 10).unwrap_err(),
            StepError::ExhaustedHalvings { trials: 11 }
        );
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(step_lower_bound(0.5, 1.0), 0.25);
        assert_abs_diff_eq!(step_lower_bound(0.9, 10.0), 0.005, epsilon = 1e-18);
        assert!(step_lower_bound(1.0 - 1e-12, 1.0) < 1e-11);
    }

    #[test]
    fn rule_invariants() {
        assert!(StepRule::armijo(0.0).is_err());
        assert!(StepRule::armijo(1.0).is_err());
        assert!(StepRule::constant(0.0).is_err());
        struct Half;
        impl StepSupplier for Half {
            fn step(&self, _: usize, _: &Point, _: &Tangent, _: f64) -> f64 {
                0.5
            }
        }
        assert!(StepRule::external(Arc::new(Half), 0.5, 0.5, true).is_err());
        assert!(StepRule::external(Arc::new(Half), 0.5, 2.0, true).is_ok());
        assert!(StepRule::Armijo { beta: 1.5, cap_r: 1.0, max_halvings: 3 }.validate().is_err());
    }

    #[test]
    fn config_parsing() {
        let c: StepRuleConfig = serde_json::from_str(r#"{"rule": "armijo", "beta": 0.6}"#).unwrap();
        assert_eq!(c.max_halvings, 60);
        assert!(matches!(c.to_rule().unwrap(), StepRule::Armijo { beta, .. } if beta == 0.6));
        let c: StepRuleConfig = serde_json::from_str(r#"{"rule": "constant", "t0": 0.5}"#).unwrap();
        assert!(matches!(c.to_rule().unwrap(), StepRule::Constant { t0 } if t0 == 0.5));
        let c: StepRuleConfig = serde_json::from_str(r#"{"rule": "constant"}"#).unwrap();
        assert!(c.to_rule().is_err());
    }
}
