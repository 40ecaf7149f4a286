use std::fmt;

use nalgebra::DMatrix;

use crate::graphcore::{num_pairs, ReparamOperators};
use crate::linalg;
use crate::{Error, Result};

/// Coordinate system of a Fisher information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSpace {
    /// `Vec(L)`, `M^2` coordinates.
    FullL,
    /// `alpha`, `M(M-1)/2` coordinates.
    Alpha,
    /// A support subset of `alpha`.
    Support,
}

impl ParamSpace {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParamSpace::FullL => "FULL_L",
            ParamSpace::Alpha => "ALPHA",
            ParamSpace::Support => "SUPPORT",
        }
    }
}

impl fmt::Display for ParamSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symmetric PSD information matrix tagged with its parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    matrix: DMatrix<f64>,
    space: ParamSpace,
    m: usize,
}

impl FisherInfo {
    /// Validates shape, symmetry (`1e-10` relative) and PSD-ness
    /// (`lambda_min >= -1e-9 ||J||_2`), then stores the symmetrized matrix.
    pub fn new(matrix: DMatrix<f64>, space: ParamSpace, m: usize) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "FIM must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let expected = match space {
            ParamSpace::FullL => Some(m * m),
            ParamSpace::Alpha => Some(num_pairs(m)),
            ParamSpace::Support => None,
        };
        if let Some(e) = expected {
            if dim != e {
                return Err(Error::DimensionMismatch(format!(
                    "{space} FIM for M={m} must be {e}x{e}, got {dim}x{dim}"
                )));
            }
        } else if dim == 0 || dim > num_pairs(m) {
            return Err(Error::DimensionMismatch(format!(
                "SUPPORT FIM for M={m} has invalid size {dim}"
            )));
        }
        let scale = linalg::max_abs(&matrix);
        let asym = linalg::max_abs(&(&matrix - matrix.transpose()));
        if asym > 1e-10 * scale {
            return Err(Error::ConstraintViolation {
                what: "FIM symmetry",
                residual: asym,
            });
        }
        let matrix = linalg::symmetrize(&matrix);
        if dim > 0 && scale > 0.0 {
            let ev = linalg::sym_eigenvalues(&matrix);
            let norm = ev.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            let min = ev.min();
            if min < -1e-9 * norm {
                return Err(Error::ConstraintViolation {
                    what: "FIM positive semi-definiteness",
                    residual: -min,
                });
            }
        }
        Ok(Self { matrix, space, m })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn space(&self) -> ParamSpace {
        self.space
    }

    /// Graph order `M`.
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.matrix, linalg::RANK_REL_TOL)
    }

    pub fn rcond(&self) -> f64 {
        linalg::psd_rcond(&self.matrix)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * factor,
            space: self.space,
            m: self.m,
        }
    }
}

/// `J_alpha = Psi^T J_L Psi`.
pub fn alpha_fim_from_full(j_full: &FisherInfo, ops: &ReparamOperators) -> Result<FisherInfo> {
    let m = ops.order();
    if j_full.space() != ParamSpace::FullL || j_full.dim() != m * m {
        return Err(Error::DimensionMismatch(format!(
            "expected a FULL_L FIM of size {0}x{0}, got {1} {2}x{2}",
            m * m,
            j_full.space(),
            j_full.dim()
        )));
    }
    let psi = ops.psi();
    let j = psi.transpose() * j_full.matrix() * psi;
    FisherInfo::new(linalg::symmetrize(&j), ParamSpace::Alpha, m)
}
