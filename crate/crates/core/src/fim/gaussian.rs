use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Result};

use super::info::{FisherInfo, ParamSpace};

/// Derivatives of a Gaussian model's mean and covariance with respect to `q`
/// parameters, evaluated at one point.
#[derive(Debug, Clone)]
pub struct GaussianModelJacobians {
    /// `d x q`, `d mu / d theta`.
    pub mean_jac: DMatrix<f64>,
    /// `d^2 x q`, `d Vec(C) / d theta`.
    pub cov_jac: DMatrix<f64>,
    /// `d x d`, positive definite.
    pub cov: DMatrix<f64>,
    pub space: ParamSpace,
    /// Graph order, for tagging the resulting FIM.
    pub m: usize,
}

impl GaussianModelJacobians {
    pub fn new(
        mean_jac: DMatrix<f64>,
        cov_jac: DMatrix<f64>,
        cov: DMatrix<f64>,
        space: ParamSpace,
        m: usize,
    ) -> Result<Self> {
        let d = cov.nrows();
        if !cov.is_square()
            || mean_jac.nrows() != d
            || cov_jac.nrows() != d * d
            || mean_jac.ncols() != cov_jac.ncols()
        {
            return Err(Error::DimensionMismatch(format!(
                "mean jacobian {:?}, covariance jacobian {:?} and covariance {:?} are inconsistent",
                mean_jac.shape(),
                cov_jac.shape(),
                cov.shape()
            )));
        }
        Ok(Self {
            mean_jac,
            cov_jac,
            cov,
            space,
            m,
        })
    }

    pub fn num_params(&self) -> usize {
        self.mean_jac.ncols()
    }
}

/// `G^T C^{-1} G + 1/2 Q^T (C^{-1} kron C^{-1}) Q` for mean jacobian `G` and
/// covariance jacobian `Q`.
pub fn slepian_bangs(j: &GaussianModelJacobians) -> Result<FisherInfo> {
    let d = j.cov.nrows();
    let q = j.num_params();
    let c_inv = linalg::spd_inverse(&j.cov, "Gaussian model covariance")?;
    let mut fim = j.mean_jac.transpose() * &c_inv * &j.mean_jac;
    if linalg::max_abs(&j.cov_jac) > 0.0 {
        // 1/2 tr(C^{-1} dC_k C^{-1} dC_l)
        let products: Vec<DMatrix<f64>> = (0..q)
            .map(|k| &c_inv * DMatrix::from_column_slice(d, d, j.cov_jac.column(k).as_slice()))
            .collect();
        let transposed: Vec<DMatrix<f64>> = products.iter().map(|p| p.transpose()).collect();
        for k in 0..q {
            for l in k..q {
                let v = 0.5 * products[k].dot(&transposed[l]);
                fim[(k, l)] += v;
                if k != l {
                    fim[(l, k)] += v;
                }
            }
        }
    }
    FisherInfo::new(linalg::symmetrize(&fim), j.space, j.m)
}

/// Sample mean of `s s^T` over score vectors.
pub fn empirical_fim(scores: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    if scores.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "need at least two score samples, got {}",
            scores.len()
        )));
    }
    let q = scores[0].len();
    let mut acc = DMatrix::zeros(q, q);
    for (n, s) in scores.iter().enumerate() {
        if s.len() != q {
            return Err(Error::DimensionMismatch(format!(
                "score {n} has length {}, expected {q}",
                s.len()
            )));
        }
        acc.ger(1.0, s, s, 1.0);
    }
    Ok(acc / scores.len() as f64)
}
