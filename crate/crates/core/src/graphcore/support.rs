use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

use super::laplacian::AlphaVector;

/// Default threshold for calling an `alpha` entry nonzero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Sorted support set of `alpha` and the selection matrices built from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSelector {
    dim: usize,
    support: Vec<usize>,
}

/// Indices with `|alpha_k| > zero_tol`.
pub fn support_selector(alpha: &AlphaVector, zero_tol: f64) -> Result<SupportSelector> {
    if !(zero_tol >= 0.0) {
        return Err(Error::InvalidDimension(format!(
            "zero tolerance must be nonnegative, got {zero_tol}"
        )));
    }
    let support: Vec<usize> = alpha
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > zero_tol)
        .map(|(k, _)| k)
        .collect();
    SupportSelector::from_indices(alpha.len(), support)
}

impl SupportSelector {
    /// Builds a selector from 0-based indices into a length-`dim` parameter.
    pub fn from_indices(dim: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::EmptySupport);
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= dim) {
            return Err(Error::DimensionMismatch(format!(
                "support index {bad} out of range for dimension {dim}"
            )));
        }
        Ok(Self {
            dim,
            support: indices,
        })
    }

    pub fn full(dim: usize) -> Result<Self> {
        Self::from_indices(dim, (0..dim).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.support
    }

    pub fn is_full(&self) -> bool {
        self.support.len() == self.dim
    }

    pub fn contains(&self, k: usize) -> bool {
        self.support.binary_search(&k).is_ok()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.dim).filter(|k| !self.contains(*k)).collect()
    }

    /// `U_alpha`: the identity columns at the support positions.
    pub fn u_mat(&self) -> DMatrix<f64> {
        selection(self.dim, &self.support)
    }

    /// `U_/alpha`: the remaining identity columns.
    pub fn u_comp(&self) -> DMatrix<f64> {
        selection(self.dim, &self.complement())
    }

    /// `U^T v`.
    pub fn restrict(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.size(), self.support.iter().map(|&k| v[k]))
    }

    /// `U v`, zero off the support.
    pub fn embed(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (pos, &k) in self.support.iter().enumerate() {
            out[k] = v[pos];
        }
        out
    }

    /// `U^T A U`.
    pub fn restrict_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let s = &self.support;
        DMatrix::from_fn(s.len(), s.len(), |r, c| a[(s[r], s[c])])
    }
}

fn selection(dim: usize, cols: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        out[(k, c)] = 1.0;
    }
    out
}
