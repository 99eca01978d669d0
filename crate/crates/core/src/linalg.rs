//! Small dense helpers shared by the estimators.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative singular-value threshold below which a system is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}

pub fn imag_part(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.im)
}

/// Column-major vectorisation.
pub fn vec(a: &CMatrix) -> Vec<Complex64> {
    a.as_slice().to_vec()
}

/// Least-squares solution `A^+ Y` through an SVD, rejecting systems whose
/// smallest singular value falls below `RANK_TOL` times the largest.
pub fn pinv_solve(a: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} rows, right-hand side {}",
            a.nrows(),
            y.nrows()
        )));
    }
    if a.nrows() < a.ncols() {
        return Err(Error::RankDeficient(format!(
            "{}x{} system is underdetermined",
            a.nrows(),
            a.ncols()
        )));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::RankDeficient(format!(
            "singular values span [{smin:e}, {smax:e}]"
        )));
    }
    svd.solve(y, 0.0).map_err(|e| Error::RankDeficient(e.to_string()))
}

/// Solves the Hermitian system `G X = R` for `G` positive (semi)definite,
/// rejecting eigenvalues below `RANK_TOL^2` of the largest (the Gram-matrix
/// image of the singular-value threshold).
pub fn hermitian_solve(gram: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let n = gram.nrows();
    if n == 1 {
        let g = gram[(0, 0)].re;
        if g <= 0.0 {
            return Err(Error::RankDeficient("zero Gram matrix".into()));
        }
        return Ok(rhs / Complex64::new(g, 0.0));
    }
    let eig = gram.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if lmax <= 0.0 || lmin <= RANK_TOL * RANK_TOL * lmax {
        return Err(Error::RankDeficient(format!(
            "Gram eigenvalues span [{lmin:e}, {lmax:e}]"
        )));
    }
    let v = &eig.eigenvectors;
    let mut proj = v.adjoint() * rhs;
    for (i, mut row) in proj.row_iter_mut().enumerate() {
        row /= Complex64::new(eig.eigenvalues[i], 0.0);
    }
    Ok(v * proj)
}
