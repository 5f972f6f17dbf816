use super::{CalculusError, Objective};
use crate::geometry::{random_point_with, random_tangent_with, sample_rng, Ball, Point};
use crate::numeric::map_indexed;
use serde::{Deserialize, Serialize};

/// Absolute slack applied to every chord inequality.
pub const CHORD_SLACK: f64 = 1e-9;

/// Number of interior chord parameters; `t = i / 18` includes the midpoint.
const CHORD_POINTS: usize = 17;

/// Outcome of a sampled inequality check. `worst_margin` is the smallest
/// observed `rhs - lhs` (negative means a violation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sample: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub endpoints: Vec<Vec<f64>>,
}

impl ProbeReport {
    fn from_margins(samples: Vec<(f64, Option<Witness>)>) -> ProbeReport {
        let mut report =
            ProbeReport { samples: samples.len(), violations: 0, worst_margin: f64::INFINITY, witness: None };
        for (margin, witness) in samples {
            report.worst_margin = report.worst_margin.min(margin);
            if let Some(w) = witness {
                report.violations += 1;
                if report.witness.is_none() {
                    report.witness = Some(w);
                }
            }
        }
        report
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Both chord reports over the same sampled geodesics, plus the per-sample
/// verdicts `(convex_ok, quasi_convex_ok)`.
#[derive(Debug, Clone)]
pub struct ChordProbe {
    pub convexity: ProbeReport,
    pub quasi_convexity: ProbeReport,
    pub per_sample: Vec<(bool, bool)>,
}

struct ChordSample {
    convex: (f64, Option<Witness>),
    quasi: (f64, Option<Witness>),
}

fn chord_sample(obj: &dyn Objective, region: &Ball, seed: u64, index: usize) -> Result<ChordSample, CalculusError> {
    let m = obj.manifold();
    let mut rng = sample_rng(seed, index as u64);
    let a = random_point_with(region, &mut rng);
    let b = random_point_with(region, &mut rng);
    let fa = obj.value(&a);
    let fb = obj.value(&b);
    let dir = m.log(&a, &b)?;
    let mut convex = (f64::INFINITY, None);
    let mut quasi = (f64::INFINITY, None);
    let endpoints = || vec![a.coords().to_vec(), b.coords().to_vec()];
    for i in 1..=CHORD_POINTS {
        let t = i as f64 / (CHORD_POINTS + 1) as f64;
        let ft = obj.value(&m.exp(&a, &dir.scale(t))?);
        let rhs_c = (1.0 - t) * fa + t * fb;
        let rhs_q = fa.max(fb);
        let mc = rhs_c - ft;
        let mq = rhs_q - ft;
        if mc < convex.0 {
            convex.0 = mc;
        }
        if mq < quasi.0 {
            quasi.0 = mq;
        }
        if mc + CHORD_SLACK < 0.0 && convex.1.is_none() {
            convex.1 = Some(Witness { sample: index, t, lhs: ft, rhs: rhs_c, endpoints: endpoints() });
        }
        if mq + CHORD_SLACK < 0.0 && quasi.1.is_none() {
            quasi.1 = Some(Witness { sample: index, t, lhs: ft, rhs: rhs_q, endpoints: endpoints() });
        }
    }
    Ok(ChordSample { convex, quasi })
}

/// Samples geodesic chords with endpoints uniform in `region` and tests
/// `f(g(t)) <= (1-t) f(g(0)) + t f(g(1))` and
/// `f(g(t)) <= max(f(g(0)), f(g(1)))` at 17 interior parameters.
pub fn geodesic_chord_probe(
    obj: &dyn Objective,
    region: &Ball,
    samples: usize,
    seed: u64,
) -> Result<ChordProbe, CalculusError> {
    let m = obj.manifold();
    let limit = m.convexity_radius(&region.center);
    if !(region.radius < limit) {
        return Err(CalculusError::RegionTooLarge { radius: region.radius, limit });
    }
    let results = map_indexed(samples, |i| chord_sample(obj, region, seed, i));
    let mut convex = Vec::with_capacity(samples);
    let mut quasi = Vec::with_capacity(samples);
    let mut per_sample = Vec::with_capacity(samples);
    for r in results {
        let s = r?;
        per_sample.push((s.convex.1.is_none(), s.quasi.1.is_none()));
        convex.push(s.convex);
        quasi.push(s.quasi);
    }
    Ok(ChordProbe {
        convexity: ProbeReport::from_margins(convex),
        quasi_convexity: ProbeReport::from_margins(quasi),
        per_sample,
    })
}

pub fn convexity_probe(obj: &dyn Objective, region: &Ball, samples: usize, seed: u64) -> Result<ProbeReport, CalculusError> {
    Ok(geodesic_chord_probe(obj, region, samples, seed)?.convexity)
}

pub fn quasi_convexity_probe(
    obj: &dyn Objective,
    region: &Ball,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport, CalculusError> {
    Ok(geodesic_chord_probe(obj, region, samples, seed)?.quasi_convexity)
}

/// Empirical sharpness constant `inf (f(x) - f(xbar)) / d(x, xbar)^q` over
/// points sampled in `B(xbar, radius)`.
///
/// The solution set is approximated by `{xbar}`, which is exact when `xbar`
/// is the unique minimizer in the ball.
pub fn weak_sharp_probe(
    obj: &dyn Objective,
    xbar: &Point,
    q: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, CalculusError> {
    let m = obj.manifold();
    let limit = m.convexity_radius(xbar);
    if !(radius < limit) {
        return Err(CalculusError::RegionTooLarge { radius, limit });
    }
    let fbar = obj.value(xbar);
    let region = Ball::new(xbar.clone(), radius);
    let ratios = map_indexed(samples, |i| -> Result<Option<f64>, CalculusError> {
        let mut rng = sample_rng(seed, i as u64);
        let x = random_point_with(&region, &mut rng);
        let d = m.dist(&x, xbar)?;
        let gap = obj.value(&x) - fbar;
        if gap < -1e-12 {
            return Err(CalculusError::NegativeGap { gap });
        }
        if d == 0.0 {
            return Ok(None);
        }
        Ok(Some(gap / d.powf(q)))
    });
    let mut alpha = f64::INFINITY;
    for r in ratios {
        if let Some(a) = r? {
            alpha = alpha.min(a);
        }
    }
    Ok(alpha)
}

/// Lower estimate of the gradient Lipschitz constant on `region`:
/// the largest `|P_{y->x} grad f(y) - grad f(x)| / d(x, y)` over sampled
/// pairs. Half of the pairs are independent, half are close neighbours.
pub fn lipschitz_estimate(obj: &dyn Objective, region: &Ball, samples: usize, seed: u64) -> Result<f64, CalculusError> {
    let m = obj.manifold();
    let quotients = map_indexed(samples, |i| -> Result<f64, CalculusError> {
        let mut rng = sample_rng(seed, i as u64);
        let x = random_point_with(region, &mut rng);
        let y = if i % 2 == 0 {
            random_point_with(region, &mut rng)
        } else {
            let v = random_tangent_with(&x, 0.05 * region.radius, &mut rng);
            m.exp(&x, &v)?
        };
        let d = m.dist(&x, &y)?;
        if d == 0.0 {
            return Ok(0.0);
        }
        let gx = obj.gradient(&x)?;
        let gy = obj.gradient(&y)?;
        let moved = m.parallel_transport(&y, &x, &gy)?;
        Ok(m.norm(&moved.add(&gx.scale(-1.0))?) / d)
    });
    let mut best: f64 = 0.0;
    for q in quotients {
        best = best.max(q?);
    }
    Ok(best)
}
