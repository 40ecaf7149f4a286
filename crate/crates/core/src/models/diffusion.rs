//! Graph-filter diffusion: `x = H z`, `H = sum_f h_f L^f`, `z ~ N(0, C_z)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::fim::{FisherInfo, GaussianModelJacobians, ParamSpace};
use crate::graphcore::{num_pairs, pairs, LaplacianMatrix, ReparamOperators};
use crate::linalg;
use crate::{Error, Result};

/// Known filter taps `h_0 .. h_{F-1}` and input covariance `C_z`.
#[derive(Debug, Clone)]
pub struct DiffusionScenario {
    h: Vec<f64>,
    input_cov: DMatrix<f64>,
}

impl DiffusionScenario {
    pub fn new(h: Vec<f64>, input_cov: DMatrix<f64>) -> Result<Self> {
        if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDimension(
                "filter needs at least one finite tap".into(),
            ));
        }
        if !input_cov.is_square() || input_cov.nrows() < 2 {
            return Err(Error::InvalidDimension(format!(
                "input covariance must be square with order >= 2, got {:?}",
                input_cov.shape()
            )));
        }
        let scale = linalg::max_abs(&input_cov);
        let asym = linalg::max_abs(&(&input_cov - input_cov.transpose()));
        if asym > 1e-12 * scale {
            return Err(Error::ConstraintViolation {
                what: "input covariance symmetry",
                residual: asym,
            });
        }
        let min = linalg::min_eigenvalue(&input_cov);
        if min < -1e-9 * linalg::sym_norm2(&input_cov) {
            return Err(Error::ConstraintViolation {
                what: "input covariance positive semi-definiteness",
                residual: -min,
            });
        }
        Ok(Self { h, input_cov })
    }

    /// White input, `C_z = I`.
    pub fn stationary(h: Vec<f64>, m: usize) -> Result<Self> {
        Self::new(h, DMatrix::identity(m, m))
    }

    pub fn taps(&self) -> &[f64] {
        &self.h
    }

    pub fn filter_order(&self) -> usize {
        self.h.len()
    }

    pub fn input_cov(&self) -> &DMatrix<f64> {
        &self.input_cov
    }

    pub fn order(&self) -> usize {
        self.input_cov.nrows()
    }
}

/// `H = sum_f h_f L^f`, rejected when `min |eig(H)| <= 1e-10 ||H||_2`.
pub fn filter_matrix(l: &LaplacianMatrix, h: &[f64]) -> Result<DMatrix<f64>> {
    let powers = linalg::matrix_powers(l.matrix(), h.len().saturating_sub(1));
    let mut hm = DMatrix::zeros(l.order(), l.order());
    for (f, c) in h.iter().enumerate() {
        hm += &powers[f] * *c;
    }
    check_filter(&hm)?;
    Ok(linalg::symmetrize(&hm))
}

fn check_filter(hm: &DMatrix<f64>) -> Result<()> {
    let ev = linalg::sym_eigenvalues(hm);
    let norm = ev.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let min_abs = ev.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if !(min_abs > 1e-10 * norm) {
        return Err(Error::FilterSingular {
            min_abs_eig: min_abs,
            norm,
        });
    }
    Ok(())
}

fn check_dims(l: &LaplacianMatrix, sc: &DiffusionScenario) -> Result<()> {
    if l.order() != sc.order() {
        return Err(Error::DimensionMismatch(format!(
            "Laplacian of order {} with input covariance of order {}",
            l.order(),
            sc.order()
        )));
    }
    Ok(())
}

fn check_ops(m: usize, ops: &ReparamOperators) -> Result<()> {
    if ops.order() != m {
        return Err(Error::DimensionMismatch(format!(
            "operators of order {} used with a Laplacian of order {m}",
            ops.order()
        )));
    }
    Ok(())
}

/// `C_x = H C_z H`.
pub fn diffusion_covariance(l: &LaplacianMatrix, sc: &DiffusionScenario) -> Result<DMatrix<f64>> {
    check_dims(l, sc)?;
    let hm = filter_matrix(l, sc.taps())?;
    Ok(linalg::symmetrize(&(&hm * sc.input_cov() * &hm)))
}

/// `d Vec(C_x) / d alpha`, one `M^2` column per `alpha` entry.
///
/// Column `k` is `Vec(Y + Y^T)` with `Y = X_k C_z H` and
/// `X_k = -sum_f h_f sum_{j=1..f} (L^{j-1} d_k)(L^{f-j} d_k)^T`.
pub fn diffusion_cov_jacobian(
    l: &LaplacianMatrix,
    sc: &DiffusionScenario,
    ops: &ReparamOperators,
) -> Result<DMatrix<f64>> {
    check_dims(l, sc)?;
    let m = l.order();
    check_ops(m, ops)?;
    let hm = filter_matrix(l, sc.taps())?;
    let czh = sc.input_cov() * &hm;
    let f_max = sc.filter_order().saturating_sub(1);
    let powers = linalg::matrix_powers(l.matrix(), f_max.saturating_sub(1));
    let mut jac = DMatrix::zeros(m * m, num_pairs(m));
    if f_max == 0 {
        return Ok(jac);
    }
    for (k, (i, j)) in pairs(m).enumerate() {
        let v: Vec<_> = powers.iter().map(|p| p.column(i) - p.column(j)).collect();
        let mut x = DMatrix::zeros(m, m);
        for (f, hf) in sc.taps().iter().enumerate().skip(1) {
            if *hf == 0.0 {
                continue;
            }
            for jj in 1..=f {
                x.ger(-*hf, &v[jj - 1], &v[f - jj], 1.0);
            }
        }
        let y = x * &czh;
        let dc = &y + y.transpose();
        jac.column_mut(k).copy_from_slice(dc.as_slice());
    }
    Ok(jac)
}

/// Information about `alpha` carried by the output covariance:
/// `1/2 tr(C^+ dC_k C^+ dC_l)`.
///
/// `C^+` is the inverse of `C_x` when it is nonsingular and its
/// pseudo-inverse otherwise (rank-deficient input covariance).
pub fn diffusion_fim(
    l: &LaplacianMatrix,
    sc: &DiffusionScenario,
    ops: &ReparamOperators,
) -> Result<FisherInfo> {
    let m = l.order();
    let jac = diffusion_cov_jacobian(l, sc, ops)?;
    let cx = diffusion_covariance(l, sc)?;
    let c_inv = linalg::psd_inverse(&cx)
        .inverse
        .unwrap_or_else(|| linalg::sym_pinv(&cx));
    let k = num_pairs(m);
    let mut a = DMatrix::zeros(m * m, k);
    let mut b = DMatrix::zeros(m * m, k);
    for c in 0..k {
        let dc = DMatrix::from_column_slice(m, m, jac.column(c).as_slice());
        let p = &c_inv * dc;
        a.column_mut(c).copy_from_slice(p.as_slice());
        b.column_mut(c).copy_from_slice(p.transpose().as_slice());
    }
    let fim = a.transpose() * b * 0.5;
    FisherInfo::new(linalg::symmetrize(&fim), ParamSpace::Alpha, m)
}

/// Dense evaluation of the quadruple tap sum
/// `Psi^T sum h_f1 h_f2 A_{f1,i} (C^{-1} kron C^{-1}) K_{f2,j} Psi` with
/// `A_{f,i} = (L^{f-i} C_z H kron L^{i-1}) + (L^{f-i} kron L^{i-1} C_z H)` and
/// `K_{f,j} = (H C_z L^{f-j} kron L^{j-1}) + (L^{f-j} kron H C_z L^{j-1})`.
///
/// This expansion carries no `1/2`, so it equals twice [`diffusion_fim`].
/// It forms `M^2 x M^2` matrices and is intended for small `M`.
pub fn diffusion_fim_quadruple_sum(
    l: &LaplacianMatrix,
    sc: &DiffusionScenario,
    ops: &ReparamOperators,
) -> Result<DMatrix<f64>> {
    check_dims(l, sc)?;
    let m = l.order();
    check_ops(m, ops)?;
    let hm = filter_matrix(l, sc.taps())?;
    let cx = linalg::symmetrize(&(&hm * sc.input_cov() * &hm));
    let c_inv = linalg::spd_inverse(&cx, "diffusion output covariance")?;
    let hcz = &hm * sc.input_cov();
    let czh = sc.input_cov() * &hm;
    let f_max = sc.filter_order().saturating_sub(1);
    let powers = linalg::matrix_powers(l.matrix(), f_max);
    let left_term = |f: usize, i: usize| -> DMatrix<f64> {
        (&powers[f - i] * &czh).kronecker(&powers[i - 1])
            + powers[f - i].kronecker(&(&powers[i - 1] * &czh))
    };
    let right_term = |f: usize, j: usize| -> DMatrix<f64> {
        (&hcz * &powers[f - j]).kronecker(&powers[j - 1])
            + powers[f - j].kronecker(&(&hcz * &powers[j - 1]))
    };
    let middle = c_inv.kronecker(&c_inv);
    let psi = ops.psi();
    let mut out = DMatrix::zeros(num_pairs(m), num_pairs(m));
    for f1 in 1..=f_max {
        for i in 1..=f1 {
            let left = psi.transpose() * left_term(f1, i) * &middle;
            for f2 in 1..=f_max {
                for j in 1..=f2 {
                    let right = right_term(f2, j) * psi;
                    out += &left * right * (sc.taps()[f1] * sc.taps()[f2]);
                }
            }
        }
    }
    Ok(out)
}

/// Stationary case `C_z = I` through the eigendecomposition `L = V Lambda V^T`.
///
/// With `u^k = V^T d_k`, `h_a = sum_f h_f lambda_a^f` and
/// `g_ab = sum_f h_f sum_{j=1..f} lambda_a^{f-j} lambda_b^{j-1}`,
/// `J_kl = 1/2 sum_ab g_ab^2 (1/h_a + 1/h_b)^2 u^k_a u^k_b u^l_a u^l_b`.
pub fn diffusion_fim_stationary(
    l: &LaplacianMatrix,
    h: &[f64],
    ops: &ReparamOperators,
) -> Result<FisherInfo> {
    let m = l.order();
    check_ops(m, ops)?;
    if h.is_empty() {
        return Err(Error::InvalidDimension(
            "filter needs at least one tap".into(),
        ));
    }
    let eig = SymmetricEigen::new(linalg::symmetrize(l.matrix()));
    let lam = &eig.eigenvalues;
    let hv: Vec<f64> = lam
        .iter()
        .map(|&x| h.iter().rev().fold(0.0, |acc, c| acc * x + c))
        .collect();
    let norm = hv.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let min_abs = hv.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if !(min_abs > 1e-10 * norm) {
        return Err(Error::FilterSingular {
            min_abs_eig: min_abs,
            norm,
        });
    }
    let mut w = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let mut g = 0.0;
            for (f, hf) in h.iter().enumerate().skip(1) {
                for j in 1..=f {
                    g += hf * lam[a].powi((f - j) as i32) * lam[b].powi((j - 1) as i32);
                }
            }
            let s = 1.0 / hv[a] + 1.0 / hv[b];
            w[a * m + b] = 0.5 * g * g * s * s;
        }
    }
    let v = &eig.eigenvectors;
    let k = num_pairs(m);
    let mut z = DMatrix::zeros(m * m, k);
    let mut zw = DMatrix::zeros(m * m, k);
    for (c, (i, j)) in pairs(m).enumerate() {
        let u = v.row(i) - v.row(j);
        for a in 0..m {
            for b in 0..m {
                let val = u[a] * u[b];
                z[(a * m + b, c)] = val;
                zw[(a * m + b, c)] = val * w[a * m + b];
            }
        }
    }
    let fim = z.transpose() * zw;
    FisherInfo::new(linalg::symmetrize(&fim), ParamSpace::Alpha, m)
}

/// Zero mean jacobian, covariance jacobian and `C_x` for [`crate::fim::slepian_bangs`].
pub fn diffusion_gaussian_jacobians(
    l: &LaplacianMatrix,
    sc: &DiffusionScenario,
    ops: &ReparamOperators,
) -> Result<GaussianModelJacobians> {
    let m = l.order();
    let jac = diffusion_cov_jacobian(l, sc, ops)?;
    let cov = diffusion_covariance(l, sc)?;
    GaussianModelJacobians::new(
        DMatrix::zeros(m, num_pairs(m)),
        jac,
        cov,
        ParamSpace::Alpha,
        m,
    )
}

/// Per-sample score `1/2 (x^T C^{-1} dC_k C^{-1} x - tr(C^{-1} dC_k))` for
/// Monte Carlo validation.
pub fn diffusion_score_fn(
    l: &LaplacianMatrix,
    sc: &DiffusionScenario,
    ops: &ReparamOperators,
) -> Result<impl Fn(&nalgebra::DVector<f64>) -> nalgebra::DVector<f64>> {
    let m = l.order();
    let jac = diffusion_cov_jacobian(l, sc, ops)?;
    let cov = diffusion_covariance(l, sc)?;
    let c_inv = linalg::spd_inverse(&cov, "diffusion output covariance")?;
    let k = num_pairs(m);
    let mats: Vec<DMatrix<f64>> = (0..k)
        .map(|c| {
            let dc = DMatrix::from_column_slice(m, m, jac.column(c).as_slice());
            &c_inv * dc * &c_inv
        })
        .collect();
    let traces: Vec<f64> = (0..k)
        .map(|c| {
            let dc = DMatrix::from_column_slice(m, m, jac.column(c).as_slice());
            (&c_inv * dc).trace()
        })
        .collect();
    Ok(move |x: &nalgebra::DVector<f64>| {
        nalgebra::DVector::from_iterator(
            k,
            (0..k).map(|c| 0.5 * ((x.transpose() * &mats[c] * x)[(0, 0)] - traces[c])),
        )
    })
}
