use nalgebra::{DMatrix, DVector};

use crate::graphcore::{ReparamOperators, SupportSelector};
use crate::linalg;
use crate::{Error, Result};

use super::info::{FisherInfo, ParamSpace};

/// Cramér-Rao bound matrices for one scenario.
///
/// For complete graphs (`space = ALPHA`) `b1` is `J_alpha^{-1}` and `b2` is
/// `Psi^T J_L^{-1} Psi`. For the oracle bounds (`space = SUPPORT`) `b1` is the
/// inverse of the reduced FIM and `b2` the support block of `J_alpha^{-1}`.
/// A missing bound carries the reason in `b1_failure` / `b2_failure`.
#[derive(Debug, Clone)]
pub struct CrbReport {
    pub space: ParamSpace,
    pub s: usize,
    pub b1: Option<DMatrix<f64>>,
    pub b2: Option<DMatrix<f64>>,
    pub trace_b1: Option<f64>,
    pub trace_b2: Option<f64>,
    pub b1_failure: Option<String>,
    pub b2_failure: Option<String>,
    /// Reciprocal condition number of `J_alpha`.
    pub rcond_jalpha: f64,
    /// Reciprocal condition number of `U^T J_alpha U` (oracle reports only).
    pub rcond_reduced: Option<f64>,
    /// Reciprocal condition number of `J_L` (complete reports with `J_L` only).
    pub rcond_full: Option<f64>,
}

impl CrbReport {
    pub const CSV_HEADER: &'static str =
        "space,s,exists_b1,exists_b2,trace_b1,trace_b2,rcond_jalpha,rcond_reduced";

    pub fn exists_b1(&self) -> bool {
        self.b1.is_some()
    }

    pub fn exists_b2(&self) -> bool {
        self.b2.is_some()
    }

    /// One CSV row matching [`CrbReport::CSV_HEADER`]; absent values are empty.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.space,
            self.s,
            self.exists_b1(),
            self.exists_b2(),
            fmt_opt(self.trace_b1),
            fmt_opt(self.trace_b2),
            fmt_num(self.rcond_jalpha),
            fmt_opt(self.rcond_reduced)
        )
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Complete-graph bounds from `J_alpha` and, optionally, `J_L`.
///
/// Singular information matrices are reported in the failure fields; this
/// function only errors on shape mismatches.
pub fn crb_complete(
    j_alpha: &FisherInfo,
    j_full: Option<&FisherInfo>,
    ops: &ReparamOperators,
) -> Result<CrbReport> {
    let m = ops.order();
    let k = ops.num_params();
    if j_alpha.space() != ParamSpace::Alpha || j_alpha.dim() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected an ALPHA FIM of size {k}, got {} of size {}",
            j_alpha.space(),
            j_alpha.dim()
        )));
    }
    let inv = linalg::psd_inverse(j_alpha.matrix());
    let mut report = CrbReport {
        space: ParamSpace::Alpha,
        s: k,
        trace_b1: inv.inverse.as_ref().map(|b| b.trace()),
        b1_failure: inv
            .inverse
            .is_none()
            .then(|| "ALPHA FIM singular".to_string()),
        b1: inv.inverse,
        b2: None,
        trace_b2: None,
        b2_failure: Some("FULL_L FIM not supplied".to_string()),
        rcond_jalpha: inv.rcond,
        rcond_reduced: None,
        rcond_full: None,
    };
    if let Some(jf) = j_full {
        if jf.space() != ParamSpace::FullL || jf.dim() != m * m {
            return Err(Error::DimensionMismatch(format!(
                "expected a FULL_L FIM of size {}, got {} of size {}",
                m * m,
                jf.space(),
                jf.dim()
            )));
        }
        let inv_full = linalg::psd_inverse(jf.matrix());
        report.rcond_full = Some(inv_full.rcond);
        match inv_full.inverse {
            Some(jl_inv) => {
                let psi = ops.psi();
                let b2 = linalg::symmetrize(&(psi.transpose() * jl_inv * psi));
                report.trace_b2 = Some(b2.trace());
                report.b2 = Some(b2);
                report.b2_failure = None;
            }
            None => report.b2_failure = Some("FULL_L FIM singular".to_string()),
        }
    }
    Ok(report)
}

/// Oracle bounds for a known support.
///
/// `B1 = (U^T J_alpha U)^{-1}` needs only the reduced FIM to be invertible,
/// so it can exist when `B2 = U^T J_alpha^{-1} U` does not.
pub fn oracle_crb(j_alpha: &FisherInfo, sel: &SupportSelector) -> Result<CrbReport> {
    if j_alpha.space() != ParamSpace::Alpha || j_alpha.dim() != sel.dim() {
        return Err(Error::DimensionMismatch(format!(
            "support selector of dimension {} does not match {} FIM of size {}",
            sel.dim(),
            j_alpha.space(),
            j_alpha.dim()
        )));
    }
    let reduced = linalg::psd_inverse(&sel.restrict_matrix(j_alpha.matrix()));
    let full = linalg::psd_inverse(j_alpha.matrix());
    let b2 = full.inverse.as_ref().map(|inv| sel.restrict_matrix(inv));
    Ok(CrbReport {
        space: ParamSpace::Support,
        s: sel.size(),
        trace_b1: reduced.inverse.as_ref().map(|b| b.trace()),
        trace_b2: b2.as_ref().map(|b| b.trace()),
        b1_failure: reduced
            .inverse
            .is_none()
            .then(|| "SUPPORT FIM singular".to_string()),
        b2_failure: b2.is_none().then(|| "ALPHA FIM singular".to_string()),
        b1: reduced.inverse,
        b2,
        rcond_jalpha: full.rcond,
        rcond_reduced: Some(reduced.rcond),
        rcond_full: None,
    })
}

/// Smallest eigenvalue of `a - b`; nonnegative iff `a` dominates `b` in the PSD order.
pub fn psd_order_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(linalg::min_eigenvalue(&(a - b)))
}

/// `|| (alpha_hat - alpha) - B * score ||_2`, the residual of the efficiency
/// condition for bound matrix `B` and the score evaluated at the true `alpha`.
pub fn efficiency_residual(
    alpha_hat: &DVector<f64>,
    alpha: &DVector<f64>,
    bound: &DMatrix<f64>,
    score: &DVector<f64>,
) -> Result<f64> {
    let n = alpha.len();
    if alpha_hat.len() != n || bound.shape() != (n, n) || score.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "efficiency residual needs matching sizes, got alpha {n}, estimate {}, bound {:?}, score {}",
            alpha_hat.len(),
            bound.shape(),
            score.len()
        )));
    }
    Ok(((alpha_hat - alpha) - bound * score).norm())
}
