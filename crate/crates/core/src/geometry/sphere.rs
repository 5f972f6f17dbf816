//! Unit sphere embedded in `R^{n+1}`.

use super::{dot, norm2, GeometryError, Result, ANTIPODE_MARGIN};
use std::f64::consts::PI;

/// Great-circle distance, using the chord length on whichever side avoids
/// cancellation.
pub(super) fn dist(x: &[f64], y: &[f64]) -> f64 {
    if dot(x, y) >= 0.0 {
        let chord = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        2.0 * (chord / 2.0).min(1.0).asin()
    } else {
        let chord = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
        PI - 2.0 * (chord / 2.0).min(1.0).asin()
    }
}

pub(super) fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let theta = norm2(v);
    if theta == 0.0 {
        return x.to_vec();
    }
    let (s, c) = theta.sin_cos();
    x.iter().zip(v).map(|(a, b)| c * a + s * b / theta).collect()
}

pub(super) fn log(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let theta = dist(x, y);
    if theta > PI - ANTIPODE_MARGIN {
        return Err(GeometryError::OutsideInjectivityRadius { distance: theta, radius: PI });
    }
    let c = dot(x, y);
    let u: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - c * a).collect();
    let un = norm2(&u);
    if theta == 0.0 || un == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    Ok(u.into_iter().map(|ui| ui * theta / un).collect())
}

/// Transport along the minimal geodesic from `x` to `y`:
/// `v - <y, v> / (1 + <x, y>) (x + y)`.
pub(super) fn transport(x: &[f64], y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let theta = dist(x, y);
    if theta > PI - ANTIPODE_MARGIN {
        return Err(GeometryError::OutsideInjectivityRadius { distance: theta, radius: PI });
    }
    let c = dot(y, v) / (1.0 + dot(x, y));
    Ok(v.iter().zip(x.iter().zip(y)).map(|(vi, (a, b))| vi - c * (a + b)).collect())
}

pub(super) fn basis(x: &[f64]) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m - 1);
    // Gram-Schmidt on the projected standard basis, skipping the coordinate
    // most aligned with x.
    let skip = (0..m).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
    for i in (0..m).filter(|&i| i != skip) {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        for _ in 0..2 {
            let c = dot(x, &e);
            e.iter_mut().zip(x).for_each(|(ei, xi)| *ei -= c * xi);
            for b in &out {
                let c = dot(b, &e);
                e.iter_mut().zip(b).for_each(|(ei, bi)| *ei -= c * bi);
            }
        }
        let n = norm2(&e);
        e.iter_mut().for_each(|ei| *ei /= n);
        out.push(e);
    }
    out
}
