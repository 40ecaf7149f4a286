use nalgebra::{DMatrix, DVector};

use crate::graphcore::{num_pairs, pairs, AlphaVector, ReparamOperators, SupportSelector};
use crate::linalg;
use crate::models::{dc_total_fim, DcScenario};
use crate::{Error, Result};

use super::config::{recovered_support, EstimateResult, SolverConfig};
use super::qp::{Qp, QpOutcome};

/// The weighted least-squares objective is `a^T J a - 2 b^T a + const` with
/// `J` the total information and `b = sum_n G_n^T W_n p[n]`.
fn dc_quadratic(
    observations: &DMatrix<f64>,
    sc: &DcScenario,
    ops: &ReparamOperators,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = sc.order();
    if observations.shape() != (sc.num_samples(), m) {
        return Err(Error::DimensionMismatch(format!(
            "observations {:?}, expected {} x {m}",
            observations.shape(),
            sc.num_samples()
        )));
    }
    let j = dc_total_fim(sc, ops)?.into_matrix();
    let mut b = DVector::zeros(num_pairs(m));
    for (n, theta) in sc.thetas().iter().enumerate() {
        let v = sc.weight(n) * observations.row(n).transpose();
        for (k, (i, jj)) in pairs(m).enumerate() {
            b[k] -= (theta[i] - theta[jj]) * (v[i] - v[jj]);
        }
    }
    Ok((j, b))
}

enum Method {
    ProjectedGradient,
    Admm,
}

fn solve(
    observations: &DMatrix<f64>,
    sc: &DcScenario,
    support: Option<&SupportSelector>,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
    method: Method,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let (j, b) = dc_quadratic(observations, sc, ops)?;
    let k = b.len();
    if let Some(s) = support {
        if s.dim() != k {
            return Err(Error::DimensionMismatch(format!(
                "support over {} coordinates for {k} parameters",
                s.dim()
            )));
        }
    }
    let c = &b * 2.0 + DVector::from_element(k, cfg.reg_lambda);
    let (q, c) = match support {
        Some(s) => (s.restrict_matrix(&j), s.restrict(&c)),
        None => (j, c),
    };
    let nonunique = cfg.reg_lambda == 0.0 && linalg::psd_rcond(&q) < linalg::SINGULAR_RCOND;
    let qp = Qp { q, c };
    let x0 = linalg::sym_pinv(&qp.q) * &qp.c * 0.5;
    let QpOutcome {
        x,
        iterations,
        converged,
        trace,
    } = match method {
        Method::ProjectedGradient => qp.solve_pg(x0, cfg),
        Method::Admm => qp.solve_admm(x0, cfg),
    };
    let alpha = match support {
        Some(s) => s.embed(&x),
        None => x,
    };
    let support_recovered = Some(recovered_support(&alpha));
    Ok(EstimateResult {
        alpha_hat: AlphaVector::new(alpha)?,
        iterations,
        converged,
        objective_trace: trace,
        support_recovered,
        nonunique,
    })
}

/// Constrained ML estimate: minimizes
/// `sum_n ||p[n] - L theta[n]||^2_{W_n} + lambda ||alpha||_1` over `alpha <= 0`
/// by projected gradient.
pub fn dc_cmle(
    observations: &DMatrix<f64>,
    sc: &DcScenario,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
) -> Result<EstimateResult> {
    solve(observations, sc, None, cfg, ops, Method::ProjectedGradient)
}

/// [`dc_cmle`] solved by ADMM on the split `alpha = z`, `z <= 0`.
pub fn dc_cmle_admm(
    observations: &DMatrix<f64>,
    sc: &DcScenario,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
) -> Result<EstimateResult> {
    solve(observations, sc, None, cfg, ops, Method::Admm)
}

/// [`dc_cmle`] with coordinates outside `support` fixed to zero.
pub fn dc_oracle_cmle(
    observations: &DMatrix<f64>,
    sc: &DcScenario,
    support: &SupportSelector,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
) -> Result<EstimateResult> {
    solve(
        observations,
        sc,
        Some(support),
        cfg,
        ops,
        Method::ProjectedGradient,
    )
}
