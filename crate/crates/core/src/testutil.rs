//! Shared fixtures for unit tests.

use crate::calculus::FnObjective;
use crate::geometry::{random_point, Ball, Manifold, Point};

/// `1/2 sum w_i d^2(x, y_i)` with gradient `-sum w_i log_x y_i`, written
/// directly against the geometry layer.
pub(crate) fn half_squared_distance(m: Manifold, anchors: Vec<Point>, weights: Vec<f64>) -> FnObjective {
    let (a2, w2) = (anchors.clone(), weights.clone());
    FnObjective::new(
        m,
        move |x| 0.5 * anchors.iter().zip(&weights).map(|(y, w)| w * m.dist(x, y).unwrap().powi(2)).sum::<f64>(),
        move |x| {
            let mut g = vec![0.0; x.coords().len()];
            for (y, w) in a2.iter().zip(&w2) {
                let l = m.log(x, y)?;
                g.iter_mut().zip(l.coords()).for_each(|(gi, li)| *gi -= w * li);
            }
            Ok(m.project_tangent(x, g))
        },
    )
    .with_lower_bound(0.0)
}

pub(crate) fn random_anchors(m: Manifold, n: usize, radius: f64, seed: u64) -> (Vec<Point>, Vec<f64>) {
    let region = Ball::new(Point::origin(m), radius);
    let pts = (0..n).map(|i| random_point(&region, seed + i as u64)).collect();
    (pts, vec![1.0 / n as f64; n])
}

pub(crate) fn euclid_half_norm2(dim: usize) -> FnObjective {
    let m = Manifold::Euclidean { dim };
    FnObjective::new(
        m,
        |x| 0.5 * x.coords().iter().map(|c| c * c).sum::<f64>(),
        move |x| Ok(m.project_tangent(x, x.coords().to_vec())),
    )
    .with_lower_bound(0.0)
}
