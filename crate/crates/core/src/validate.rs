//! Self-checks run by `lapcrb validate`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fim::{crb_complete, oracle_crb, psd_order_gap, slepian_bangs};
use crate::graphcore::{
    build_reparam_operators, index_pair, laplacian_from_alpha, num_pairs, pair_index,
    psi_t_kron_psi, psi_t_vec, AlphaVector, SupportSelector, WeightedGraph,
};
use crate::io::{matrix_from_reader, read_matrix_csv};
use crate::linalg;
use crate::models::{
    dc_gaussian_jacobians, dc_total_fim, diffusion_cov_jacobian, diffusion_covariance, lgmrf_fim,
    lgmrf_grad, lgmrf_loglik, DcScenario, DiffusionScenario, LgmrfScenario,
};
use crate::Result;

const GOLDEN_P_M4: &str = include_str!("../golden/p_matrix_m4.csv");

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn random_complete_alpha(m: usize, rng: &mut ChaCha8Rng) -> AlphaVector {
    let v = (0..num_pairs(m))
        .map(|_| -rng.random_range(0.5..2.0))
        .collect();
    AlphaVector::from_order(m, v).expect("sized")
}

fn random_sym(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(m, m)
}

fn golden(path: Option<&Path>) -> Result<(bool, String)> {
    let expected = match path {
        Some(p) => read_matrix_csv(p)?,
        None => matrix_from_reader(GOLDEN_P_M4.as_bytes(), "embedded p_matrix_m4.csv")?,
    };
    let ops = build_reparam_operators(4)?;
    let ok = ops.p_mat() == &expected;
    Ok((
        ok,
        if ok {
            "bit-exact".into()
        } else {
            "P matrix differs from golden file".into()
        },
    ))
}

fn psi_structure(max_m: usize) -> Result<(bool, String)> {
    for m in 2..=max_m {
        let ops = build_reparam_operators(m)?;
        let psi = ops.psi();
        for k in 0..num_pairs(m) {
            let (i, j) = index_pair(m, k);
            let col = psi.column(k);
            let mut expected = DVector::zeros(m * m);
            expected[i * m + i] = -1.0;
            expected[j * m + j] = -1.0;
            expected[j * m + i] = 1.0;
            expected[i * m + j] = 1.0;
            if col != expected {
                return Ok((false, format!("column {k} of M={m} has the wrong pattern")));
            }
        }
    }
    Ok((true, format!("M = 2..{max_m}")))
}

fn ordering(max_m: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 2..=max_m {
        for k in 0..num_pairs(m) {
            let (i, j) = index_pair(m, k);
            if !(i > j) || pair_index(m, i, j) != k {
                return Ok((false, format!("pair {k} of M={m} does not round-trip")));
            }
        }
        let alpha = random_complete_alpha(m, &mut rng);
        let back = crate::graphcore::alpha_from_laplacian(&laplacian_from_alpha(&alpha))?;
        if back != alpha {
            return Ok((
                false,
                format!("alpha -> L -> alpha changed values at M={m}"),
            ));
        }
    }
    Ok((true, format!("M = 2..{max_m}")))
}

fn structured_products() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = 5;
    let ops = build_reparam_operators(m)?;
    let psi = ops.psi();
    let a = random_sym(m, &mut rng);
    let b = random_sym(m, &mut rng);
    let dense = psi.transpose() * linalg::kron(&a, &b) * psi;
    let e1 = linalg::rel_frobenius(&psi_t_kron_psi(&a, &b), &dense);
    let x = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let v = psi.transpose() * linalg::vec(&x);
    let e2 = (psi_t_vec(&x) - &v).norm() / v.norm();
    let err = e1.max(e2);
    Ok((err < 1e-12, format!("max relative error {err:.2e}")))
}

fn lgmrf_fd() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 4;
    let alpha = random_complete_alpha(m, &mut rng);
    let s = random_sym(m, &mut rng) * 0.2;
    let n = 30;
    let l = laplacian_from_alpha(&alpha);
    let grad = lgmrf_grad(&s, &l, n, None)?;
    let mut fd = DVector::zeros(grad.len());
    for k in 0..grad.len() {
        let h = 1e-5;
        let mut plus = alpha.values().clone();
        let mut minus = alpha.values().clone();
        plus[k] += h;
        minus[k] -= h;
        let fp = lgmrf_loglik(&s, &laplacian_from_alpha(&AlphaVector::new(plus)?), n, None)?;
        let fm = lgmrf_loglik(
            &s,
            &laplacian_from_alpha(&AlphaVector::new(minus)?),
            n,
            None,
        )?;
        fd[k] = (fp - fm) / (2.0 * h);
    }
    let err = (&fd - &grad).norm() / grad.norm();
    Ok((err < 1e-6, format!("relative error {err:.2e}")))
}

fn diffusion_fd() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = 4;
    let alpha = random_complete_alpha(m, &mut rng);
    let ops = build_reparam_operators(m)?;
    let sc = DiffusionScenario::new(vec![1.0, 0.4, 0.1], random_sym(m, &mut rng))?;
    let jac = diffusion_cov_jacobian(&laplacian_from_alpha(&alpha), &sc, &ops)?;
    let mut fd = DMatrix::zeros(m * m, num_pairs(m));
    for k in 0..num_pairs(m) {
        let h = 1e-5;
        let mut plus = alpha.values().clone();
        let mut minus = alpha.values().clone();
        plus[k] += h;
        minus[k] -= h;
        let cp = diffusion_covariance(&laplacian_from_alpha(&AlphaVector::new(plus)?), &sc)?;
        let cm = diffusion_covariance(&laplacian_from_alpha(&AlphaVector::new(minus)?), &sc)?;
        fd.set_column(k, &linalg::vec(&((cp - cm) / (2.0 * h))));
    }
    let err = linalg::rel_frobenius(&fd, &jac);
    Ok((err < 1e-6, format!("relative error {err:.2e}")))
}

fn lgmrf_closed_form() -> Result<(bool, String)> {
    let g = WeightedGraph::new(2, [(1, 0, 1.0)])?;
    let ops = build_reparam_operators(2)?;
    let j = lgmrf_fim(&g.laplacian(), &LgmrfScenario::connected(10)?, &ops)?;
    let r = crb_complete(&j, None, &ops)?;
    let t = r.trace_b1.unwrap_or(f64::NAN);
    Ok(((t - 0.2).abs() < 1e-12, format!("trace {t:.15}")))
}

fn dc_gaussian_assembly() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = 4;
    let ops = build_reparam_operators(m)?;
    let thetas = (0..6)
        .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let sc = DcScenario::new(thetas, random_sym(m, &mut rng), None)?;
    let a = dc_total_fim(&sc, &ops)?;
    let b = slepian_bangs(&dc_gaussian_jacobians(&sc)?)?;
    let err = linalg::rel_frobenius(b.matrix(), a.matrix());
    Ok((err < 1e-10, format!("relative error {err:.2e}")))
}

fn bound_ordering(scenarios: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    for _ in 0..scenarios {
        let m = rng.random_range(3..=6);
        let ops = build_reparam_operators(m)?;
        let k = num_pairs(m);
        let thetas = (0..k)
            .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let sc = DcScenario::new(thetas, random_sym(m, &mut rng), None)?;
        let j = dc_total_fim(&sc, &ops)?;
        let size = rng.random_range(1..=k);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.truncate(size);
        let o = oracle_crb(&j, &SupportSelector::from_indices(k, idx)?)?;
        if let (Some(b1), Some(b2)) = (&o.b1, &o.b2) {
            let gap = psd_order_gap(b2, b1)? / linalg::sym_norm2(b2).max(f64::MIN_POSITIVE);
            worst = worst.min(gap);
        }
    }
    Ok((
        worst >= -1e-9,
        format!("min normalized eigenvalue of B2 - B1: {worst:.2e}"),
    ))
}

/// Runs the suite; `quick` keeps only the cheap structural checks.
pub fn run_checks(quick: bool, golden_file: Option<&Path>) -> Vec<CheckResult> {
    let mut out = vec![
        check("golden P matrix (M=4)", golden(golden_file)),
        check(
            "Psi column structure",
            psi_structure(if quick { 6 } else { 12 }),
        ),
        check(
            "alpha ordering round trip",
            ordering(if quick { 6 } else { 12 }),
        ),
        check("structured Psi products", structured_products()),
        check("LGMRF M=2 closed form", lgmrf_closed_form()),
    ];
    if !quick {
        out.push(check("LGMRF gradient finite difference", lgmrf_fd()));
        out.push(check(
            "diffusion jacobian finite difference",
            diffusion_fd(),
        ));
        out.push(check("DC Gaussian assembly", dc_gaussian_assembly()));
        out.push(check("oracle bound ordering", bound_ordering(20)));
    }
    out
}
