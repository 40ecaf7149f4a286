//! `min x^T Q x - c^T x` over `x <= 0` for PSD `Q`.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::config::SolverConfig;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const POLISH_EVERY: usize = 5;

pub(crate) struct Qp {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
}

pub(crate) struct QpOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

fn project(x: DVector<f64>) -> DVector<f64> {
    x.map(|v| v.min(0.0))
}

impl Qp {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.q * x)[(0, 0)] - self.c.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x * 2.0 - &self.c
    }

    fn inv_diag(&self) -> DVector<f64> {
        let d = self.q.diagonal() * 2.0;
        let floor = d.amax().max(f64::MIN_POSITIVE) * 1e-12;
        d.map(|v| 1.0 / v.max(floor))
    }

    /// `|| x - P(x - D^{-1} g) ||_inf`, zero exactly at KKT points.
    fn kkt(&self, x: &DVector<f64>, g: &DVector<f64>, dinv: &DVector<f64>) -> f64 {
        (x - project(x - g.component_mul(dinv))).amax()
    }

    fn converged(&self, x: &DVector<f64>, kkt: f64, cfg: &SolverConfig) -> bool {
        kkt <= cfg.tol * x.amax().max(1.0)
    }

    /// Minimizer on the face where the listed coordinates are free and the
    /// rest are zero, if it is feasible.
    fn face_minimizer(&self, x: &DVector<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
        let free: Vec<usize> = (0..x.len()).filter(|&k| x[k] < 0.0 || g[k] > 0.0).collect();
        if free.is_empty() {
            return Some(DVector::zeros(x.len()));
        }
        let qff = DMatrix::from_fn(free.len(), free.len(), |a, b| self.q[(free[a], free[b])]);
        let cf = DVector::from_iterator(free.len(), free.iter().map(|&k| self.c[k] * 0.5));
        let sol = Cholesky::new(qff)?.solve(&cf);
        if sol.iter().any(|v| *v > 0.0 || !v.is_finite()) {
            return None;
        }
        let mut out = DVector::zeros(x.len());
        for (a, &k) in free.iter().enumerate() {
            out[k] = sol[a];
        }
        Some(out)
    }

    /// Diagonally scaled projected gradient with Armijo backtracking; every
    /// few iterations the minimizer on the current face is tried and kept if
    /// it is feasible and does not increase the objective.
    pub fn solve_pg(&self, x0: DVector<f64>, cfg: &SolverConfig) -> QpOutcome {
        let dinv = self.inv_diag();
        let mut x = project(x0);
        let mut f = self.objective(&x);
        let mut trace = vec![f];
        for it in 0..cfg.max_iters {
            let g = self.gradient(&x);
            if self.converged(&x, self.kkt(&x, &g, &dinv), cfg) {
                return QpOutcome {
                    x,
                    iterations: it,
                    converged: true,
                    trace,
                };
            }
            if it % POLISH_EVERY == 0 {
                if let Some(cand) = self.face_minimizer(&x, &g) {
                    let fc = self.objective(&cand);
                    if fc <= f {
                        x = cand;
                        f = fc;
                        trace.push(f);
                        continue;
                    }
                }
            }
            let mut t = cfg.step_init;
            let mut accepted = false;
            while t >= MIN_STEP {
                let cand = project(&x - g.component_mul(&dinv) * t);
                let fc = self.objective(&cand);
                if fc <= f + ARMIJO * g.dot(&(&cand - &x)) {
                    let moved = (&cand - &x).amax();
                    x = cand;
                    f = fc;
                    accepted = moved > 0.0;
                    break;
                }
                t *= cfg.backtrack_beta;
            }
            trace.push(f);
            if !accepted {
                let g = self.gradient(&x);
                let done = self.converged(&x, self.kkt(&x, &g, &dinv), cfg);
                return QpOutcome {
                    x,
                    iterations: it + 1,
                    converged: done,
                    trace,
                };
            }
        }
        let g = self.gradient(&x);
        let done = self.converged(&x, self.kkt(&x, &g, &dinv), cfg);
        QpOutcome {
            x,
            iterations: cfg.max_iters,
            converged: done,
            trace,
        }
    }

    /// ADMM on the split `x = z`, `z <= 0`, with penalty
    /// `rho = admm_rho * tr(2Q) / n`.
    pub fn solve_admm(&self, x0: DVector<f64>, cfg: &SolverConfig) -> QpOutcome {
        let n = self.c.len();
        let scale = (self.q.trace() * 2.0 / n as f64).max(f64::MIN_POSITIVE);
        let rho = cfg.admm_rho * scale;
        let sys = &self.q * 2.0 + DMatrix::identity(n, n) * rho;
        let chol = Cholesky::new(sys).expect("2Q + rho I is positive definite");
        let mut z = project(x0);
        let mut u = DVector::zeros(n);
        let mut trace = vec![self.objective(&z)];
        for it in 0..cfg.max_iters {
            let x = chol.solve(&(&self.c + (&z - &u) * rho));
            let z_old = z.clone();
            z = project(&x + &u);
            u += &x - &z;
            trace.push(self.objective(&z));
            let tol = cfg.tol * z.amax().max(1.0);
            if (&x - &z).amax() <= tol && (&z - &z_old).amax() <= tol {
                return QpOutcome {
                    x: z,
                    iterations: it + 1,
                    converged: true,
                    trace,
                };
            }
        }
        QpOutcome {
            x: z,
            iterations: cfg.max_iters,
            converged: false,
            trace,
        }
    }
}
