pub(super) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub(super) fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(a, b)| a + b).collect()
}

pub(super) fn log(x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(a, b)| a - b).collect()
}
