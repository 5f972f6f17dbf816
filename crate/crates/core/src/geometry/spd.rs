//! Symmetric positive definite matrices with the affine-invariant metric
//! `<U, V>_X = tr(X^{-1} U X^{-1} V)`. Matrices are stored row-major.

use super::{GeometryError, Result};
use nalgebra::{DMatrix, SymmetricEigen};

fn mat(n: usize, c: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, c)
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Applies `f` to the spectrum of a symmetric matrix.
fn spectral(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    sym(q * d * q.transpose())
}

fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
}

/// `(X^{1/2}, X^{-1/2})`.
fn sqrt_pair(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(x.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return Err(GeometryError::Numerical("matrix is not positive definite".into()));
    }
    let q = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let si = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((sym(q * s * q.transpose()), sym(q * si * q.transpose())))
}

pub(super) fn symmetrize(n: usize, c: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (c[i * n + j] + c[j * n + i]);
            c[i * n + j] = a;
            c[j * n + i] = a;
        }
    }
}

pub(super) fn asymmetry(n: usize, c: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((c[i * n + j] - c[j * n + i]).abs());
        }
    }
    worst
}

pub(super) fn check_point(n: usize, c: &[f64]) -> std::result::Result<(), String> {
    let scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let asym = asymmetry(n, c);
    if asym > super::POINT_TOL * scale {
        return Err(format!("asymmetry {asym:e}"));
    }
    let mut m = mat(n, c);
    m = sym(m);
    let lo = eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0) {
        return Err(format!("smallest eigenvalue {lo} is not positive"));
    }
    Ok(())
}

pub(super) fn dist(n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let (_, si) = sqrt_pair(&mat(n, x))?;
    let w = sym(&si * mat(n, y) * &si);
    Ok(eigenvalues(&w).into_iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// `X^{1/2} expm(X^{-1/2} V X^{-1/2}) X^{1/2}`.
pub(super) fn exp(n: usize, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (s, si) = sqrt_pair(&mat(n, x))?;
    let w = sym(&si * mat(n, v) * &si);
    let e = spectral(&w, f64::exp);
    Ok(flat(&sym(&s * e * &s)))
}

/// `X^{1/2} logm(X^{-1/2} Y X^{-1/2}) X^{1/2}`.
pub(super) fn log(n: usize, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (s, si) = sqrt_pair(&mat(n, x))?;
    let w = sym(&si * mat(n, y) * &si);
    let l = spectral(&w, f64::ln);
    Ok(flat(&sym(&s * l * &s)))
}

/// `E V E^T` with `E = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}`.
pub(super) fn transport(n: usize, x: &[f64], y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (s, si) = sqrt_pair(&mat(n, x))?;
    let w = sym(&si * mat(n, y) * &si);
    let e = &s * spectral(&w, f64::sqrt) * &si;
    Ok(flat(&sym(&e * mat(n, v) * e.transpose())))
}

pub(super) fn inner(n: usize, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let xm = mat(n, x);
    let Some(chol) = xm.cholesky() else {
        return f64::NAN;
    };
    let a = chol.solve(&mat(n, u));
    let b = chol.solve(&mat(n, v));
    (a * b).trace()
}

/// `X^{1/2} E_ij X^{1/2}` for the Frobenius-orthonormal basis `E_ij` of
/// symmetric matrices.
pub(super) fn basis(n: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let (s, _) = sqrt_pair(&mat(n, x)).expect("SPD base point");
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            out.push(flat(&sym(&s * e * &s)));
        }
    }
    out
}
