use nalgebra::{Cholesky, DMatrix, DVector};

use crate::graphcore::{
    num_pairs, pairs, psi_t_kron_psi, psi_t_vec, AlphaVector, ReparamOperators, SupportSelector,
};
use crate::linalg;
use crate::models::correction_matrix;
use crate::{Error, Result};

use super::config::{recovered_support, EstimateResult, SolverConfig};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;

struct Problem<'a> {
    emp_cov: &'a DMatrix<f64>,
    half_n: f64,
    lambda: f64,
    d: DMatrix<f64>,
    allowed: Vec<usize>,
    m: usize,
}

/// Objective value and `(L + D)^{-1}` at a point, if `L + D` is PD.
struct Eval {
    value: f64,
    inv: DMatrix<f64>,
}

impl Problem<'_> {
    /// `-N/2 log|L + D| + N/2 tr(L S) - lambda 1^T alpha`, the negated
    /// penalized log-likelihood.
    fn eval(&self, alpha: &DVector<f64>) -> Option<Eval> {
        let l = laplacian_matrix(alpha, self.m);
        let chol = Cholesky::new(&l + &self.d)?;
        let logdet: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|x| x.ln())
                .sum::<f64>();
        let value = self.half_n * (l.component_mul(self.emp_cov).sum() - logdet)
            - self.lambda * alpha.sum();
        value.is_finite().then(|| Eval {
            value,
            inv: chol.inverse(),
        })
    }

    /// Gradient on the allowed coordinates, zero elsewhere.
    fn gradient(&self, inv: &DMatrix<f64>) -> DVector<f64> {
        let full = psi_t_vec(&(inv - self.emp_cov)) * (-self.half_n);
        let mut g = DVector::zeros(full.len());
        for &k in &self.allowed {
            g[k] = full[k] - self.lambda;
        }
        g
    }

    /// Inverse of the Hessian diagonal `N/2 (d_k^T A d_k)^2`.
    fn inv_diag(&self, inv: &DMatrix<f64>) -> DVector<f64> {
        let h = DVector::from_iterator(
            num_pairs(self.m),
            pairs(self.m).map(|(i, j)| {
                let q = inv[(i, i)] + inv[(j, j)] - 2.0 * inv[(i, j)];
                self.half_n * q * q
            }),
        );
        let floor = h.amax().max(f64::MIN_POSITIVE) * 1e-12;
        h.map(|v| 1.0 / v.max(floor))
    }

    /// Projected Newton direction: exact Hessian on the coordinates that are
    /// not held at zero, diagonal scaling on those that are.
    fn direction(
        &self,
        alpha: &DVector<f64>,
        g: &DVector<f64>,
        inv: &DMatrix<f64>,
        eps: f64,
    ) -> DVector<f64> {
        let dinv = self.inv_diag(inv);
        let mut dir = g.component_mul(&dinv);
        let free: Vec<usize> = self
            .allowed
            .iter()
            .copied()
            .filter(|&k| !(alpha[k] >= -eps && g[k] < 0.0))
            .collect();
        if free.is_empty() {
            return dir;
        }
        let h = psi_t_kron_psi(inv, inv);
        let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| {
            self.half_n * h[(free[a], free[b])]
        });
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&k| g[k]));
        if let Some(ch) = Cholesky::new(hff) {
            let sol = ch.solve(&gf);
            if sol.iter().all(|v| v.is_finite()) {
                for (a, &k) in free.iter().enumerate() {
                    dir[k] = sol[a];
                }
            }
        }
        dir
    }

    fn step(&self, alpha: &DVector<f64>, dir: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut out = alpha.clone();
        for &k in &self.allowed {
            out[k] = (alpha[k] - t * dir[k]).min(0.0);
        }
        out
    }

    fn kkt(&self, alpha: &DVector<f64>, g: &DVector<f64>, dinv: &DVector<f64>) -> f64 {
        let scaled = g.component_mul(dinv);
        (alpha - self.step(alpha, &scaled, 1.0)).amax()
    }
}

fn laplacian_matrix(alpha: &DVector<f64>, m: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(m, m);
    for (k, (i, j)) in pairs(m).enumerate() {
        l[(i, j)] = alpha[k];
        l[(j, i)] = alpha[k];
        l[(i, i)] -= alpha[k];
        l[(j, j)] -= alpha[k];
    }
    l
}

/// Off-diagonal of `(S + D + eps I)^{-1} - D`, clipped to `<= 0` on the
/// allowed coordinates; pushed further from zero if `L + D` is not PD.
fn initial_point(p: &Problem) -> Result<DVector<f64>> {
    let m = p.m;
    let eps = 1e-3 * p.emp_cov.trace() / m as f64;
    let shifted = p.emp_cov + &p.d + DMatrix::identity(m, m) * eps.max(f64::MIN_POSITIVE);
    let prec = linalg::spd_inverse(&linalg::symmetrize(&shifted), "regularized covariance")? - &p.d;
    let mut alpha = DVector::zeros(num_pairs(m));
    for (k, (i, j)) in pairs(m).enumerate() {
        if p.allowed.binary_search(&k).is_ok() {
            alpha[k] = prec[(i, j)].min(0.0);
        }
    }
    if p.eval(&alpha).is_none() {
        let tau = 1e-2 * m as f64 / p.emp_cov.trace().max(f64::MIN_POSITIVE);
        for &k in &p.allowed {
            alpha[k] = alpha[k].min(-tau);
        }
    }
    if p.eval(&alpha).is_none() {
        return Err(Error::NotPositiveDefinite(
            "no positive definite starting point on the allowed support".into(),
        ));
    }
    Ok(alpha)
}

fn run(
    emp_cov: &DMatrix<f64>,
    n_samples: usize,
    allowed: Vec<usize>,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let m = ops.order();
    if emp_cov.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "empirical covariance {:?} for operators of order {m}",
            emp_cov.shape()
        )));
    }
    if n_samples == 0 {
        return Err(Error::EmptyInput("no samples".into()));
    }
    let p = Problem {
        emp_cov,
        half_n: n_samples as f64 / 2.0,
        lambda: cfg.reg_lambda,
        d: correction_matrix(m, None)?,
        allowed,
        m,
    };
    let mut alpha = initial_point(&p)?;
    let mut cur = p.eval(&alpha).expect("initial point is PD");
    let mut trace = vec![cur.value];
    let mut t_prev = cfg.step_init;
    for it in 0..cfg.max_iters {
        let g = p.gradient(&cur.inv);
        let dinv = p.inv_diag(&cur.inv);
        let scale = alpha.amax().max(1.0);
        if p.kkt(&alpha, &g, &dinv) <= cfg.tol * scale {
            return finish(alpha, it, true, trace);
        }
        let kkt = p.kkt(&alpha, &g, &dinv);
        let dir = p.direction(&alpha, &g, &cur.inv, kkt.min(1e-3 * scale));
        let mut t = (2.0 * t_prev).min(cfg.step_init);
        let next = loop {
            if t < MIN_STEP {
                if p.kkt(&alpha, &g, &dinv) <= cfg.tol.sqrt() * scale {
                    return finish(alpha, it, true, trace);
                }
                return Err(Error::StepCollapse {
                    iteration: it,
                    step: t,
                    objective: cur.value,
                });
            }
            let cand = p.step(&alpha, &dir, t);
            if let Some(e) = p.eval(&cand) {
                if e.value <= cur.value + ARMIJO * g.dot(&(&cand - &alpha)) {
                    break (cand, e);
                }
            }
            t *= cfg.backtrack_beta;
        };
        t_prev = t;
        let change = (cur.value - next.1.value).abs();
        alpha = next.0;
        cur = next.1;
        trace.push(cur.value);
        if change <= cfg.tol * cur.value.abs().max(1.0) {
            return finish(alpha, it + 1, true, trace);
        }
    }
    finish(alpha, cfg.max_iters, false, trace)
}

fn finish(
    alpha: DVector<f64>,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
) -> Result<EstimateResult> {
    let support_recovered = Some(recovered_support(&alpha));
    Ok(EstimateResult {
        alpha_hat: AlphaVector::new(alpha)?,
        iterations,
        converged,
        objective_trace: trace,
        support_recovered,
        nonunique: false,
    })
}

/// Penalized ML Laplacian of a connected LGMRF by projected Newton-scaled
/// gradient ascent on `N/2 log|L + D| - N/2 tr(L S) - lambda ||alpha||_1`, `alpha <= 0`.
///
/// The trace records the negated objective, so it is nonincreasing.
pub fn lgmrf_pgd(
    emp_cov: &DMatrix<f64>,
    n_samples: usize,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
) -> Result<EstimateResult> {
    run(
        emp_cov,
        n_samples,
        (0..ops.num_params()).collect(),
        cfg,
        ops,
    )
}

/// [`lgmrf_pgd`] with coordinates outside `support` pinned to zero.
pub fn lgmrf_oracle_pgd(
    emp_cov: &DMatrix<f64>,
    n_samples: usize,
    support: &SupportSelector,
    cfg: &SolverConfig,
    ops: &ReparamOperators,
) -> Result<EstimateResult> {
    if support.dim() != ops.num_params() {
        return Err(Error::DimensionMismatch(format!(
            "support over {} coordinates for {} parameters",
            support.dim(),
            ops.num_params()
        )));
    }
    run(emp_cov, n_samples, support.indices().to_vec(), cfg, ops)
}
