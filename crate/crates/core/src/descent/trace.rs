use crate::geometry::{Manifold, Point};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    GradientTolReached,
    PointTolReached,
    /// Neither `f` nor `|grad f|` improved for
    /// [`STALL_WINDOW`](super::STALL_WINDOW) iterations: the iterate is as
    /// accurate as the objective's round-off allows.
    Stalled,
    MaxIters,
    NondifferentiableIterate,
    StepFailure,
    ValueIncrease,
}

impl TerminalStatus {
    pub fn converged(self) -> bool {
        matches!(self, TerminalStatus::GradientTolReached | TerminalStatus::PointTolReached | TerminalStatus::Stalled)
    }
}

/// State at iteration `k`. `step` is the `t_k` used to leave `x_k` and is
/// absent on the last record; `grad_norm` is absent when the gradient is
/// undefined at `x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_norm: Option<f64>,
    pub step: Option<f64>,
}

/// Complete record of a descent run. Immutable once returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub manifold: Manifold,
    pub records: Vec<IterateRecord>,
    pub status: TerminalStatus,
    #[serde(default)]
    pub status_detail: Option<String>,
    /// Sufficient-decrease constant the run is held to, if any.
    pub beta: Option<f64>,
    /// Upper bound `R` on the steps taken.
    pub cap_r: f64,
    /// Kept out of the serialized form so outputs stay byte-stable.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl IterateTrace {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn point(&self, k: usize) -> Point {
        Point::from_raw(self.manifold, self.records[k].point.clone())
    }

    pub fn final_point(&self) -> Point {
        self.point(self.records.len() - 1)
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.value)
    }

    pub fn final_grad_norm(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.grad_norm)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.value)
    }

    /// `(t_k, |grad f(x_k)|)` for every transition.
    pub fn transitions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records.iter().filter_map(|r| Some((r.step?, r.grad_norm?)))
    }

    pub fn min_step(&self) -> Option<f64> {
        self.transitions().map(|(t, _)| t).reduce(f64::min)
    }

    /// Transitions `k` violating `f(x_{k+1}) <= f(x_k) - beta t_k |g_k|^2 + slack`.
    pub fn decrease_violations(&self, beta: f64, slack: f64) -> Vec<usize> {
        self.records
            .windows(2)
            .filter_map(|w| {
                let (a, b) = (&w[0], &w[1]);
                let (t, g) = (a.step?, a.grad_norm?);
                (b.value > a.value - beta * t * g * g + slack).then_some(a.k)
            })
            .collect()
    }

    /// `sum_k t_k |g_k|^2`.
    pub fn weighted_gradient_sum(&self) -> f64 {
        self.transitions().map(|(t, g)| t * g * g).sum()
    }

    /// `(f(x_0) - f_low) / beta - sum_k t_k |g_k|^2`; nonnegative whenever
    /// every transition satisfied sufficient decrease.
    pub fn summability_margin(&self, beta: f64, f_low: f64) -> f64 {
        (self.records[0].value - f_low) / beta - self.weighted_gradient_sum()
    }

    /// Writes `k,f,grad_norm,t,dist_to_final`. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,f,grad_norm,t,dist_to_final")?;
        let last = self.final_point();
        for r in &self.records {
            let d = self
                .manifold
                .dist(&Point::from_raw(self.manifold, r.point.clone()), &last)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            writeln!(out, "{},{},{},{},{}", r.k, r.value, opt(r.grad_norm), opt(r.step), d)?;
        }
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One parsed row of the trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCsvRow {
    pub k: usize,
    pub f: f64,
    pub grad_norm: Option<f64>,
    pub t: Option<f64>,
    pub dist_to_final: f64,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
}

pub fn read_trace_csv<R: BufRead>(input: R) -> io::Result<Vec<TraceCsvRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "k,f,grad_norm,t,dist_to_final" {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(i + 1, e));
        let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        rows.push(TraceCsvRow {
            k: fields[0].parse().map_err(|e| bad(i + 1, e))?,
            f: num(fields[1])?,
            grad_norm: opt_num(fields[2])?,
            t: opt_num(fields[3])?,
            dist_to_final: num(fields[4])?,
        });
    }
    Ok(rows)
}
