use nalgebra::DVector;

use crate::graphcore::AlphaVector;
use crate::{Error, Result};

/// Tuning knobs shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the l1 penalty on `alpha`.
    pub reg_lambda: f64,
    /// ADMM penalty, relative to the mean diagonal of the quadratic term.
    pub admm_rho: f64,
    pub max_iters: usize,
    /// Relative KKT / objective-change tolerance.
    pub tol: f64,
    pub step_init: f64,
    pub backtrack_beta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            reg_lambda: 0.0,
            admm_rho: 1.0,
            max_iters: 5000,
            tol: 1e-8,
            step_init: 1.0,
            backtrack_beta: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("{what} out of range: {v}")));
        if !(self.reg_lambda >= 0.0) || !self.reg_lambda.is_finite() {
            return bad("reg_lambda", self.reg_lambda);
        }
        if !(self.admm_rho > 0.0) || !self.admm_rho.is_finite() {
            return bad("admm_rho", self.admm_rho);
        }
        if self.max_iters == 0 {
            return bad("max_iters", 0.0);
        }
        if !(self.tol > 0.0) {
            return bad("tol", self.tol);
        }
        if !(self.step_init > 0.0) || !self.step_init.is_finite() {
            return bad("step_init", self.step_init);
        }
        if !(self.backtrack_beta > 0.0 && self.backtrack_beta < 1.0) {
            return bad("backtrack_beta", self.backtrack_beta);
        }
        Ok(())
    }
}

/// Solver output. `objective_trace` holds the minimized objective after
/// every accepted iterate.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub alpha_hat: AlphaVector,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub support_recovered: Option<Vec<usize>>,
    /// Set when the problem has no unique minimizer (singular information
    /// without regularization).
    pub nonunique: bool,
}

/// Entries with `|alpha_k| > 1e-6 max(1, ||alpha||_inf)`.
pub fn recovered_support(alpha: &DVector<f64>) -> Vec<usize> {
    let cut = 1e-6 * alpha.amax().max(1.0);
    alpha
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > cut)
        .map(|(k, _)| k)
        .collect()
}
