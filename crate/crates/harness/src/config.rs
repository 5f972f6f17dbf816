//! Run configuration: a TOML file, overridden by command-line flags.
//!
//! ```toml
//! seed = 7
//!
//! [manifold]          # optional; checked against the data set
//! kind = "sphere"
//! dim = 2
//!
//! [data]
//! path = "points.json"   # relative to this file
//!
//! [problem]
//! p = 2.0
//! anchor = [1.0, 0.0, 0.0]  # default: extrinsic mean of the data
//! rho = 1.2                 # default: inf on Hadamard manifolds
//!
//! [rule]
//! rule = "armijo"      # or "constant"
//! beta = 0.5
//! t0 = "auto"          # constant rule only: a number or "auto" (1 / lambda)
//!
//! [stop]
//! grad_tol = 1e-10
//! max_iters = 100000
//!
//! [start]
//! x0 = [0.0, 0.0, 1.0]  # default: the anchor
//!
//! [output]
//! dir = "out"
//! ```

use geodescent::descent::StopCriteria;
use geodescent::ext_real;
use geodescent::stepsize::{RuleKind, DEFAULT_MAX_HALVINGS};
use geodescent::Manifold;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Constant step size: a number, or `auto` for `1 / lambda` with `lambda` the
/// sampled Hessian scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    Auto,
}

impl FromStr for StepSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(StepSize::Auto);
        }
        s.parse().map(StepSize::Fixed).map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

impl Serialize for StepSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            StepSize::Fixed(t) => s.serialize_f64(*t),
            StepSize::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for StepSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) => Ok(StepSize::Fixed(t)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
    #[serde(default, with = "ext_real::option")]
    pub rho: Option<f64>,
}

fn default_p() -> f64 {
    2.0
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { p: default_p(), anchor: None, rho: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    #[serde(default = "default_rule")]
    pub rule: RuleKind,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub t0: Option<StepSize>,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
}

fn default_rule() -> RuleKind {
    RuleKind::Armijo
}

fn default_beta() -> f64 {
    0.5
}

fn default_halvings() -> u32 {
    DEFAULT_MAX_HALVINGS
}

impl Default for RuleSection {
    fn default() -> Self {
        RuleSection { rule: default_rule(), beta: default_beta(), t0: None, max_halvings: default_halvings() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub point_tol: Option<f64>,
}

fn default_grad_tol() -> f64 {
    StopCriteria::default().grad_tol
}

fn default_max_iters() -> usize {
    StopCriteria::default().max_iters
}

impl Default for StopSection {
    fn default() -> Self {
        StopSection { grad_tol: default_grad_tol(), max_iters: default_max_iters(), point_tol: None }
    }
}

impl StopSection {
    pub fn criteria(&self) -> StopCriteria {
        StopCriteria { grad_tol: self.grad_tol, max_iters: self.max_iters, point_tol: self.point_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSection {
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub manifold: Option<Manifold>,
    pub data: DataSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub rule: RuleSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub start: Option<StartSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub p: Option<f64>,
    pub rule: Option<RuleKind>,
    pub beta: Option<f64>,
    pub t0: Option<StepSize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub(crate) fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })
}

/// Resolves `p` against the directory of the config file.
pub(crate) fn relative_to(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    config.parent().map_or_else(|| p.to_path_buf(), |dir| dir.join(p))
}

impl RunConfig {
    /// Reads `path`, resolving the data and output paths relative to it.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg: RunConfig = read_toml(path)?;
        cfg.data.path = relative_to(path, &cfg.data.path);
        cfg.output.dir = relative_to(path, &cfg.output.dir);
        Ok(cfg)
    }

    /// Applies `o` (flags win), then checks the invariants.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<RunConfig, ConfigError> {
        if let Some(p) = o.p {
            self.problem.p = p;
        }
        if let Some(r) = o.rule {
            self.rule.rule = r;
        }
        if let Some(b) = o.beta {
            self.rule.beta = b;
        }
        if let Some(t) = o.t0 {
            self.rule.t0 = Some(t);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.problem.p >= 1.0 && self.problem.p.is_finite()) {
            return bad(format!("p must be a finite number >= 1, got {}", self.problem.p));
        }
        if self.rule.rule == RuleKind::Armijo && !(self.rule.beta > 0.0 && self.rule.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.rule.beta));
        }
        if let Some(StepSize::Fixed(t)) = self.rule.t0 {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t0 must be positive, got {t}"));
            }
        }
        if let Some(rho) = self.problem.rho {
            if !(rho > 0.0) {
                return bad(format!("rho must be positive, got {rho}"));
            }
        }
        if !(self.stop.grad_tol > 0.0) || self.stop.max_iters == 0 {
            return bad("stop needs grad_tol > 0 and max_iters >= 1".into());
        }
        if !self.data.path.is_file() {
            return bad(format!("data set {} does not exist", self.data.path.display()));
        }
        Ok(())
    }
}
