use super::{fp_value, varrho_p, MassProblem, WeightedPoints};
use crate::geometry::{Ball, Manifold, Point};
use crate::numeric::{ext_real, map_indexed};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Default tolerance for [`colinearity_check`].
pub const COLINEAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Warn,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    /// A failed hard check makes the configuration invalid; soft checks only
    /// warn.
    pub hard: bool,
    /// Checked against the computed center rather than before solving.
    pub post_hoc: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `varrho_p` for this backend, the largest `rho` the radius bound
    /// admits; `None` if even that ball misses some data point.
    #[serde(with = "ext_real::option")]
    pub largest_admissible_rho: Option<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(|c| c.hard && c.status == CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `name: detail` for every failed or warning check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in self.checks.iter().filter(|c| matches!(c.status, CheckStatus::Fail | CheckStatus::Warn)) {
            if !out.is_empty() {
                out.push_str("; ");
            }
            let _ = write!(out, "{}: {}", c.name, c.detail);
        }
        if out.is_empty() {
            out.push_str("all checks passed");
        }
        out
    }

    pub(crate) fn push(&mut self, name: &str, status: CheckStatus, hard: bool, detail: String) {
        self.checks.push(Check { name: name.into(), status, hard, post_hoc: false, detail });
    }

    /// Records whether the computed center has a lower objective value than
    /// every data point. The condition involves the unknown minimum, so it can
    /// only be checked once a center is available.
    pub fn add_post_hoc(&mut self, prob: &MassProblem, center: &Point) {
        let fc = fp_value(prob, center);
        let fy = min_data_value(prob);
        let status = if fc < fy { CheckStatus::Pass } else { CheckStatus::Warn };
        self.checks.push(Check {
            name: "center_below_data_values".into(),
            status,
            hard: false,
            post_hoc: true,
            detail: format!("f_p(center) = {fc}, min_i f_p(y_i) = {fy}"),
        });
    }
}

fn min_data_value(prob: &MassProblem) -> f64 {
    prob.data.points().iter().map(|y| fp_value(prob, y)).fold(f64::INFINITY, f64::min)
}

fn pass_fail(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

/// Checks that the solver's convergence guarantees apply to `prob`, started
/// from `x0` when one is given.
///
/// Hard checks: `rho <= varrho_p(rho)`, all data inside `U(o, rho)`, data not
/// colinear when `p = 1`, and `x0` inside `U(o, rho)`. Soft checks:
/// `f_p(x0) < min_i f_p(y_i)` for `p < 2`, and data inside `U(o, rho / 3)`.
pub fn validate_configuration(prob: &MassProblem, x0: Option<&Point>) -> ValidationReport {
    let m = prob.manifold();
    let o = &prob.anchor;
    let rho = prob.rho;
    let bounds = m.curvature_bounds(&Ball::new(o.clone(), 2.0 * rho));
    let varrho = varrho_p(prob.p, rho, bounds, m.injectivity_radius(o));
    let mut report = ValidationReport { checks: Vec::new(), largest_admissible_rho: None };

    report.push(
        "radius_bound",
        pass_fail(rho <= varrho),
        true,
        format!("rho = {rho}, varrho_p = {varrho}"),
    );

    let radii: Vec<f64> = prob.data.points().iter().map(|y| m.dist(o, y).unwrap_or(f64::INFINITY)).collect();
    let (far, r_max) = radii.iter().enumerate().fold((0, 0.0f64), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
    report.push(
        "data_in_ball",
        pass_fail(r_max < rho),
        true,
        format!("max_i d(o, y_i) = {r_max} (point {far}), rho = {rho}"),
    );
    report.largest_admissible_rho = (r_max < varrho).then_some(varrho);

    if prob.p == 1.0 {
        let colinear = colinearity_check(&prob.data, COLINEAR_TOL);
        let detail = if colinear { "data lie on one geodesic segment" } else { "data span more than one geodesic" };
        report.push("not_colinear", pass_fail(!colinear), true, detail.into());
    } else {
        report.push("not_colinear", CheckStatus::Skipped, true, "only required for p = 1".into());
    }

    match x0 {
        Some(x0) => {
            let inside = x0.manifold() == m && prob.inside(x0).unwrap_or(false);
            report.push("start_in_domain", pass_fail(inside), true, format!("rho = {rho}"));
            if prob.p < 2.0 {
                let f0 = fp_value(prob, x0);
                let fy = min_data_value(prob);
                let status = if f0 < fy { CheckStatus::Pass } else { CheckStatus::Warn };
                report.push(
                    "start_below_data_values",
                    status,
                    false,
                    format!("f_p(x0) = {f0}, min_i f_p(y_i) = {fy}"),
                );
            } else {
                report.push("start_below_data_values", CheckStatus::Skipped, false, "only relevant for p < 2".into());
            }
        }
        None => {
            report.push("start_in_domain", CheckStatus::Skipped, true, "no starting point given".into());
            report.push("start_below_data_values", CheckStatus::Skipped, false, "no starting point given".into());
        }
    }

    let third = rho / 3.0;
    let status = if r_max < third { CheckStatus::Pass } else { CheckStatus::Warn };
    report.push("data_in_third_ball", status, false, format!("max_i d(o, y_i) = {r_max}, rho / 3 = {third}"));
    report
}

const GRID: usize = 32;

/// `min_{s in [0, 1]} d(exp_a(s v), y)`: grid search, then golden-section
/// refinement around the best grid point.
fn segment_distance(m: Manifold, a: &Point, v: &crate::geometry::Tangent, y: &Point) -> Option<f64> {
    let at = |s: f64| -> Option<f64> { m.dist(&m.exp(a, &v.scale(s)).ok()?, y).ok() };
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=GRID {
        let d = at(i as f64 / GRID as f64)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    let step = 1.0 / GRID as f64;
    let mut lo = (best.0 as f64 - 1.0).max(0.0) * step;
    let mut hi = (best.0 as f64 + 1.0).min(GRID as f64) * step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (at(c)?, at(d)?);
    for _ in 0..80 {
        if hi - lo < 1e-14 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = at(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = at(d)?;
        }
    }
    Some(best.1.min(fc).min(fd))
}

/// True when every data point lies within `tol` of the geodesic segment
/// joining the two points farthest apart.
///
/// Geometry failures (for example antipodal points on the sphere) count as
/// "not colinear".
pub fn colinearity_check(data: &WeightedPoints, tol: f64) -> bool {
    let pts = data.points();
    let n = pts.len();
    if n <= 2 {
        return true;
    }
    let m = data.manifold();
    let rows = map_indexed(n, |i| {
        let mut best = (i, 0.0f64);
        for j in i + 1..n {
            let d = m.dist(&pts[i], &pts[j]).unwrap_or(f64::NAN);
            if d > best.1 || d.is_nan() {
                best = (j, d);
            }
        }
        best
    });
    let mut far = (0, 0, 0.0f64);
    for (i, (j, d)) in rows.into_iter().enumerate() {
        if d.is_nan() {
            return false;
        }
        if d > far.2 {
            far = (i, j, d);
        }
    }
    if far.2 == 0.0 {
        return true;
    }
    let (a, b) = (&pts[far.0], &pts[far.1]);
    let v = match m.log(a, b) {
        Ok(v) => v,
        Err(_) => return false,
    };
    map_indexed(n, |k| segment_distance(m, a, &v, &pts[k])).into_iter().all(|r| matches!(r, Some(d) if d <= tol))
}
