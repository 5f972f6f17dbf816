use super::validate::CheckStatus;
use super::{fp_gradient, lambda_p_estimate, validate_configuration, FrechetError, MassProblem, ValidationReport};
use super::LAMBDA_SAMPLES;
use crate::descent::{estimate_linear_rate, gradient_descent, IterateTrace, RateFit, StopCriteria, TerminalStatus};
use crate::geometry::Point;
use crate::stepsize::StepRule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Hessian scale used to vet constant steps. Estimated with
    /// [`lambda_p_estimate`] when absent.
    pub lambda: Option<f64>,
    pub lambda_samples: usize,
    pub seed: u64,
    /// Trailing fraction of the trace used for the rate fit.
    pub rate_tail: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { lambda: None, lambda_samples: LAMBDA_SAMPLES, seed: 0, rate_tail: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub grad_norm_final: Option<f64>,
    pub rate_fit: Option<RateFit>,
    /// Set for `p < 2` when the computed center does not beat every data
    /// point; the linear-rate guarantee then does not apply.
    pub rate_conditional: bool,
    /// Hessian scale the constant step was checked against.
    pub lambda: Option<f64>,
    pub validation_report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterResult {
    pub center: Point,
    pub trace: IterateTrace,
    pub certificates: Certificates,
}

impl CenterResult {
    pub fn converged(&self) -> bool {
        self.trace.status.converged()
    }
}

pub fn center_of_mass(
    prob: &MassProblem,
    x0: &Point,
    rule: &StepRule,
    stop: &StopCriteria,
) -> Result<CenterResult, FrechetError> {
    center_of_mass_with(prob, x0, rule, stop, &SolveOptions::default())
}

/// Validates the configuration, then runs gradient descent on `f_p` from
/// `x0`.
///
/// Constant steps must satisfy `t0 < 2 / lambda`. Runs that stop on
/// [`TerminalStatus::MaxIters`] or [`TerminalStatus::ValueIncrease`] are
/// returned as results; check [`CenterResult::converged`].
pub fn center_of_mass_with(
    prob: &MassProblem,
    x0: &Point,
    rule: &StepRule,
    stop: &StopCriteria,
    opts: &SolveOptions,
) -> Result<CenterResult, FrechetError> {
    let mut report = validate_configuration(prob, Some(x0));
    if !report.passed() {
        return Err(FrechetError::ValidationFailure(Box::new(report)));
    }
    let mut lambda = None;
    if let StepRule::Constant { t0 } = rule {
        let l = match opts.lambda {
            Some(l) => l,
            None => lambda_p_estimate(prob, x0, opts.lambda_samples, opts.seed)?.value,
        };
        lambda = Some(l);
        let ok = *t0 < 2.0 / l;
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        report.push("constant_step_bound", status, true, format!("t0 = {t0}, 2 / lambda = {}", 2.0 / l));
        if !ok {
            return Err(FrechetError::ValidationFailure(Box::new(report)));
        }
    }

    let trace = gradient_descent(prob, x0, rule, stop)?;
    match trace.status {
        TerminalStatus::NondifferentiableIterate => {
            let last = trace.final_point();
            return Err(match fp_gradient(prob, &last) {
                Err(e @ FrechetError::SingularIterate { .. }) => e,
                _ => FrechetError::StepFailure {
                    detail: trace.status_detail.clone().unwrap_or_default(),
                    trace: Box::new(trace),
                },
            });
        }
        TerminalStatus::StepFailure => {
            return Err(FrechetError::StepFailure {
                detail: trace.status_detail.clone().unwrap_or_default(),
                trace: Box::new(trace),
            });
        }
        _ => {}
    }

    let center = trace.final_point();
    report.add_post_hoc(prob, &center);
    let below = report.check("center_below_data_values").is_some_and(|c| c.status == CheckStatus::Pass);
    let certificates = Certificates {
        grad_norm_final: trace.final_grad_norm(),
        rate_fit: estimate_linear_rate(&trace, None, opts.rate_tail).ok(),
        rate_conditional: prob.p < 2.0 && !below,
        lambda,
        validation_report: report,
    };
    Ok(CenterResult { center, trace, certificates })
}
