//! Hyperboloid model `{x : <x,x>_L = -1, x_0 > 0}` with the Minkowski form
//! `<a,b>_L = -a_0 b_0 + sum_i a_i b_i`.

use super::norm2;

pub(crate) fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

/// Recomputes the time coordinate from the spatial part.
pub(super) fn renormalize(x: &mut [f64]) {
    let s2: f64 = x[1..].iter().map(|c| c * c).sum();
    x[0] = (1.0 + s2).sqrt();
}

/// `2 asinh(|x - y|_L / 2)`, accurate for nearby points where `acosh` of the
/// Minkowski product loses half the digits.
pub(super) fn dist(x: &[f64], y: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let q = minkowski(&diff, &diff).max(0.0);
    2.0 * (q.sqrt() / 2.0).asinh()
}

pub(super) fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = minkowski(v, v).max(0.0).sqrt();
    if n == 0.0 {
        return x.to_vec();
    }
    let (c, s) = (n.cosh(), n.sinh());
    x.iter().zip(v).map(|(a, b)| c * a + s * b / n).collect()
}

pub(super) fn log(x: &[f64], y: &[f64]) -> Vec<f64> {
    let d = dist(x, y);
    let c = minkowski(x, y);
    let mut u: Vec<f64> = y.iter().zip(x).map(|(b, a)| b + c * a).collect();
    let cu = minkowski(x, &u);
    u.iter_mut().zip(x).for_each(|(ui, xi)| *ui += cu * xi);
    let un = minkowski(&u, &u).max(0.0).sqrt();
    if d == 0.0 || un == 0.0 {
        return vec![0.0; x.len()];
    }
    u.into_iter().map(|ui| ui * d / un).collect()
}

/// `v + <y, v>_L / (1 - <x, y>_L) (x + y)`.
pub(super) fn transport(x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
    let c = minkowski(y, v) / (1.0 - minkowski(x, y));
    v.iter().zip(x.iter().zip(y)).map(|(vi, (a, b))| vi + c * (a + b)).collect()
}

pub(super) fn basis(x: &[f64]) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m - 1);
    for i in 1..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        for _ in 0..2 {
            let c = minkowski(x, &e);
            e.iter_mut().zip(x).for_each(|(ei, xi)| *ei += c * xi);
            for b in &out {
                let c = minkowski(b, &e);
                e.iter_mut().zip(b).for_each(|(ei, bi)| *ei -= c * bi);
            }
        }
        let n = minkowski(&e, &e).max(0.0).sqrt();
        debug_assert!(n > 0.0 && norm2(&e).is_finite());
        e.iter_mut().for_each(|ei| *ei /= n);
        out.push(e);
    }
    out
}
