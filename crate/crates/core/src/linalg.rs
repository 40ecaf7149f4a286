//! Small dense helpers shared by the bound and model code.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// A symmetric matrix is treated as singular below this reciprocal condition number.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// Relative eigenvalue threshold used for pseudo-inverses and numerical rank.
pub const RANK_REL_TOL: f64 = 1e-9;

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Column-major vectorization.
pub fn vec(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(symmetrize(a)).eigenvalues
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).min()
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm2(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Reciprocal condition number `max(lambda_min, 0) / lambda_max` of a PSD matrix.
pub fn psd_rcond(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    rcond_from_eigenvalues(&sym_eigenvalues(a))
}

fn rcond_from_eigenvalues(ev: &DVector<f64>) -> f64 {
    let max = ev.max();
    if !(max > 0.0) || !max.is_finite() {
        return 0.0;
    }
    ev.min().max(0.0) / max
}

/// Inverse of a symmetric PSD matrix together with its reciprocal condition number.
#[derive(Debug, Clone)]
pub struct PsdInverse {
    pub inverse: Option<DMatrix<f64>>,
    pub rcond: f64,
}

/// Inverts a symmetric PSD matrix, reporting singularity instead of failing.
///
/// Cholesky is tried first; the eigen route is the fallback for matrices that
/// pass the conditioning test but are not numerically Cholesky-factorable.
/// The result is explicitly symmetrized.
pub fn psd_inverse(a: &DMatrix<f64>) -> PsdInverse {
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym.clone());
    let rcond = rcond_from_eigenvalues(&eig.eigenvalues);
    if rcond < SINGULAR_RCOND {
        return PsdInverse {
            inverse: None,
            rcond,
        };
    }
    let inverse = match Cholesky::new(sym) {
        Some(ch) => ch.inverse(),
        None => {
            let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
            &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose()
        }
    };
    PsdInverse {
        inverse: Some(symmetrize(&inverse)),
        rcond,
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix, dropping eigenvalues
/// below `RANK_REL_TOL` times the largest one.
pub fn sym_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let cut = RANK_REL_TOL * scale;
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
    symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()))
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Cholesky::new(symmetrize(a))
        .map(|ch| symmetrize(&ch.inverse()))
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Numerical rank from singular values, relative tolerance `rel_tol`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Relative Frobenius distance `||a - b||_F / ||b||_F`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// Integer matrix powers `A^0 ..= A^max_pow` by repeated multiplication.
pub fn matrix_powers(a: &DMatrix<f64>, max_pow: usize) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(max_pow + 1);
    out.push(DMatrix::identity(n, n));
    for p in 1..=max_pow {
        let next = &out[p - 1] * a;
        out.push(next);
    }
    out
}
