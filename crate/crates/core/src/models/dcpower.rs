//! DC power flow: `p[n] = L theta[n] + eta[n]`, `eta[n] ~ N(0, R)`.
//!
//! The Laplacian enters only through the mean, so the information matrix is
//! `sum_n G_n^T W_n G_n` with `G_n = d(L theta[n]) / d alpha` and `W_n` the
//! noise precision on the observed entries of sample `n`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::fim::{FisherInfo, GaussianModelJacobians, ParamSpace};
use crate::graphcore::{num_pairs, pair_gram, pairs, LaplacianMatrix, ReparamOperators};
use crate::io::read_matrix_csv;
use crate::linalg;
use crate::{Error, Result};

/// Excitations, noise covariance and optional observation masks for `N` samples.
#[derive(Debug, Clone)]
pub struct DcScenario {
    thetas: Vec<DVector<f64>>,
    noise_cov: DMatrix<f64>,
    noise_inv: DMatrix<f64>,
    masks: Option<Vec<Vec<bool>>>,
}

impl DcScenario {
    pub fn new(
        thetas: Vec<DVector<f64>>,
        noise_cov: DMatrix<f64>,
        masks: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::EmptyInput(
                "DC scenario needs at least one sample".into(),
            ));
        }
        let m = noise_cov.nrows();
        if !noise_cov.is_square() || m < 2 {
            return Err(Error::InvalidDimension(format!(
                "noise covariance must be square with order >= 2, got {:?}",
                noise_cov.shape()
            )));
        }
        if let Some(n) = thetas.iter().position(|t| t.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "theta[{n}] has length {}, expected {m}",
                thetas[n].len()
            )));
        }
        let sym = linalg::max_abs(&(&noise_cov - noise_cov.transpose()));
        if sym > 1e-12 * linalg::max_abs(&noise_cov) {
            return Err(Error::NotPositiveDefinite(format!(
                "noise covariance is not symmetric (residual {sym:.3e})"
            )));
        }
        let noise_inv = linalg::spd_inverse(&noise_cov, "noise covariance")?;
        if let Some(mk) = &masks {
            if mk.len() != thetas.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} masks for {} samples",
                    mk.len(),
                    thetas.len()
                )));
            }
            if let Some(n) = mk.iter().position(|s| s.len() != m) {
                return Err(Error::DimensionMismatch(format!(
                    "mask {n} has length {}, expected {m}",
                    mk[n].len()
                )));
            }
            if !mk.iter().flatten().any(|&b| b) {
                return Err(Error::InvalidDimension(
                    "masks select no measurement at any sample".into(),
                ));
            }
        }
        Ok(Self {
            thetas,
            noise_cov,
            noise_inv,
            masks,
        })
    }

    /// Reads `theta` (M rows, one column per sample), the `M x M` noise
    /// covariance and an optional 0/1 mask file shaped like `theta`.
    pub fn from_files(theta: &Path, noise_cov: &Path, masks: Option<&Path>) -> Result<Self> {
        let t = read_matrix_csv(theta)?;
        let r = read_matrix_csv(noise_cov)?;
        let thetas = t.column_iter().map(|c| c.into_owned()).collect();
        let masks = match masks {
            Some(p) => {
                let mk = read_matrix_csv(p)?;
                if mk.shape() != t.shape() {
                    return Err(Error::parse(
                        p.display().to_string(),
                        0,
                        format!(
                            "mask shape {:?} differs from theta shape {:?}",
                            mk.shape(),
                            t.shape()
                        ),
                    ));
                }
                let mut out = Vec::with_capacity(mk.ncols());
                for (n, col) in mk.column_iter().enumerate() {
                    let mut sel = Vec::with_capacity(col.len());
                    for (i, &v) in col.iter().enumerate() {
                        if v != 0.0 && v != 1.0 {
                            return Err(Error::parse(
                                p.display().to_string(),
                                i as u64 + 1,
                                format!("mask entry in column {} must be 0 or 1, got {v}", n + 1),
                            ));
                        }
                        sel.push(v == 1.0);
                    }
                    out.push(sel);
                }
                Some(out)
            }
            None => None,
        };
        Self::new(thetas, r, masks)
    }

    /// Same excitations and noise with different masks.
    pub fn with_masks(&self, masks: Option<Vec<Vec<bool>>>) -> Result<Self> {
        Self::new(self.thetas.clone(), self.noise_cov.clone(), masks)
    }

    pub fn order(&self) -> usize {
        self.noise_cov.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[DVector<f64>] {
        &self.thetas
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn noise_inv(&self) -> &DMatrix<f64> {
        &self.noise_inv
    }

    pub fn masks(&self) -> Option<&[Vec<bool>]> {
        self.masks.as_deref()
    }

    fn mask(&self, n: usize) -> Option<&[bool]> {
        self.masks.as_ref().map(|m| m[n].as_slice())
    }

    /// Noise precision of sample `n` restricted to its observed entries.
    pub fn weight(&self, n: usize) -> DMatrix<f64> {
        masked_precision(&self.noise_cov, &self.noise_inv, self.mask(n))
    }

    /// Noiseless injections `L theta[n]`, one row per sample.
    pub fn noiseless(&self, l: &LaplacianMatrix) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.num_samples(), self.order());
        for (n, t) in self.thetas.iter().enumerate() {
            out.set_row(n, &(l.matrix() * t).transpose());
        }
        out
    }
}

/// `S (S R S)^+ S`: the inverse of the observed principal block of `R`,
/// re-embedded with zeros elsewhere.
fn masked_precision(r: &DMatrix<f64>, r_inv: &DMatrix<f64>, mask: Option<&[bool]>) -> DMatrix<f64> {
    let mask = match mask {
        Some(mk) if !mk.iter().all(|&b| b) => mk,
        _ => return r_inv.clone(),
    };
    let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let m = r.nrows();
    let mut out = DMatrix::zeros(m, m);
    if idx.is_empty() {
        return out;
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| r[(idx[a], idx[b])]);
    // The observed block of a PD matrix is PD.
    let inv =
        linalg::spd_inverse(&sub, "observed noise block").expect("principal block of PD matrix");
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = inv[(a, b)];
        }
    }
    out
}

/// `d(L theta) / d alpha`, an `M x M(M-1)/2` matrix whose column `k` is
/// `-(theta_i - theta_j)(e_i - e_j)`.
pub fn mean_jacobian(theta: &DVector<f64>) -> DMatrix<f64> {
    let m = theta.len();
    let mut g = DMatrix::zeros(m, num_pairs(m));
    for (k, (i, j)) in pairs(m).enumerate() {
        let c = theta[i] - theta[j];
        g[(i, k)] = -c;
        g[(j, k)] = c;
    }
    g
}

fn pair_differences(theta: &DVector<f64>) -> DVector<f64> {
    let m = theta.len();
    DVector::from_iterator(num_pairs(m), pairs(m).map(|(i, j)| theta[i] - theta[j]))
}

fn check_order(m: usize, ops: &ReparamOperators) -> Result<()> {
    if ops.order() != m {
        return Err(Error::DimensionMismatch(format!(
            "operators of order {} used with a scenario of order {m}",
            ops.order()
        )));
    }
    Ok(())
}

/// `Psi^T (theta theta^T kron R^{-1}) Psi` for one sample.
pub fn dc_per_sample_fim(
    theta: &DVector<f64>,
    noise_cov: &DMatrix<f64>,
    ops: &ReparamOperators,
) -> Result<FisherInfo> {
    let m = theta.len();
    check_order(m, ops)?;
    if noise_cov.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "noise covariance {:?} for theta of length {m}",
            noise_cov.shape()
        )));
    }
    let w = linalg::spd_inverse(noise_cov, "noise covariance")?;
    let c = pair_differences(theta);
    let fim = (&c * c.transpose()).component_mul(&pair_gram(&w));
    FisherInfo::new(fim, ParamSpace::Alpha, m)
}

/// Sum of per-sample information over all samples, honoring masks.
///
/// Terms are accumulated in sample order so the result is bit-stable.
pub fn dc_total_fim(sc: &DcScenario, ops: &ReparamOperators) -> Result<FisherInfo> {
    let m = sc.order();
    check_order(m, ops)?;
    let k = num_pairs(m);
    let full_gram = pair_gram(sc.noise_inv());
    let mut fim = DMatrix::zeros(k, k);
    for (n, theta) in sc.thetas().iter().enumerate() {
        let c = pair_differences(theta);
        let outer = &c * c.transpose();
        match sc.mask(n) {
            Some(mk) if !mk.iter().all(|&b| b) => {
                fim += outer.component_mul(&pair_gram(&sc.weight(n)));
            }
            _ => fim += outer.component_mul(&full_gram),
        }
    }
    FisherInfo::new(fim, ParamSpace::Alpha, m)
}

/// [`dc_total_fim`] with the scenario's masks replaced by `masks`.
pub fn dc_missing_fim(
    sc: &DcScenario,
    masks: Vec<Vec<bool>>,
    ops: &ReparamOperators,
) -> Result<FisherInfo> {
    dc_total_fim(&sc.with_masks(Some(masks))?, ops)
}

/// Information on `Vec(L)`: `sum_n theta[n] theta[n]^T kron W_n`.
pub fn dc_full_fim(sc: &DcScenario) -> Result<FisherInfo> {
    let m = sc.order();
    let mut fim = DMatrix::zeros(m * m, m * m);
    for (n, theta) in sc.thetas().iter().enumerate() {
        fim += (theta * theta.transpose()).kronecker(&sc.weight(n));
    }
    FisherInfo::new(fim, ParamSpace::FullL, m)
}

/// Score `sum_n G_n^T W_n (p[n] - L theta[n])` of a full data set.
///
/// `observations` holds one sample per row.
pub fn dc_score(
    observations: &DMatrix<f64>,
    sc: &DcScenario,
    l: &LaplacianMatrix,
) -> Result<DVector<f64>> {
    let m = sc.order();
    if observations.shape() != (sc.num_samples(), m) || l.order() != m {
        return Err(Error::DimensionMismatch(format!(
            "observations {:?} and Laplacian of order {} for {} samples of order {m}",
            observations.shape(),
            l.order(),
            sc.num_samples()
        )));
    }
    let mut score = DVector::zeros(num_pairs(m));
    for (n, theta) in sc.thetas().iter().enumerate() {
        let resid = observations.row(n).transpose() - l.matrix() * theta;
        let v = sc.weight(n) * resid;
        for (k, (i, j)) in pairs(m).enumerate() {
            score[k] -= (theta[i] - theta[j]) * (v[i] - v[j]);
        }
    }
    Ok(score)
}

/// Stacked jacobians for all samples: mean `d = M N`, covariance `I_N kron R`.
///
/// Only defined without masks, where every sample has the same dimension.
pub fn dc_gaussian_jacobians(sc: &DcScenario) -> Result<GaussianModelJacobians> {
    if sc.masks().is_some() {
        return Err(Error::DimensionMismatch(
            "stacked jacobians need fully observed samples".into(),
        ));
    }
    let m = sc.order();
    let n = sc.num_samples();
    let k = num_pairs(m);
    let mut g = DMatrix::zeros(m * n, k);
    for (s, theta) in sc.thetas().iter().enumerate() {
        g.rows_mut(s * m, m).copy_from(&mean_jacobian(theta));
    }
    let cov = DMatrix::<f64>::identity(n, n).kronecker(sc.noise_cov());
    GaussianModelJacobians::new(
        g,
        DMatrix::zeros(m * m * n * n, k),
        cov,
        ParamSpace::Alpha,
        m,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::{build_reparam_operators, laplacian_from_alpha, AlphaVector};

    #[test]
    fn order_two_unit_excitation() {
        let ops = build_reparam_operators(2).unwrap();
        let theta = DVector::from_vec(vec![1.0, 0.0]);
        let j = dc_per_sample_fim(&theta, &DMatrix::identity(2, 2), &ops).unwrap();
        assert_eq!(j.matrix()[(0, 0)], 2.0);
        let z = dc_per_sample_fim(&DVector::zeros(2), &DMatrix::identity(2, 2), &ops).unwrap();
        assert_eq!(z.matrix()[(0, 0)], 0.0);
    }

    #[test]
    fn per_sample_matches_dense_formula() {
        let m = 4;
        let ops = build_reparam_operators(m).unwrap();
        let theta = DVector::from_vec(vec![0.3, -1.2, 0.7, 2.0]);
        let r = DMatrix::from_fn(m, m, |a, b| if a == b { 2.0 } else { 0.3 });
        let j = dc_per_sample_fim(&theta, &r, &ops).unwrap();
        let rinv = r.clone().try_inverse().unwrap();
        let a = theta.transpose().kronecker(&DMatrix::identity(m, m)) * ops.psi();
        let dense = a.transpose() * rinv * a;
        assert!(linalg::rel_frobenius(j.matrix(), &dense) < 1e-12);

        let g = mean_jacobian(&theta);
        let via_g = g.transpose() * r.clone().try_inverse().unwrap() * &g;
        assert!(linalg::rel_frobenius(j.matrix(), &via_g) < 1e-12);

        let scaled = dc_per_sample_fim(&theta, &(&r * 4.0), &ops).unwrap();
        assert!(linalg::rel_frobenius(&(scaled.matrix() * 4.0), j.matrix()) < 1e-12);
    }

    #[test]
    fn identity_masks_are_exact_and_additivity_holds() {
        let ops = build_reparam_operators(3).unwrap();
        let t = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let sc = DcScenario::new(vec![t.clone(); 5], DMatrix::identity(3, 3), None).unwrap();
        let total = dc_total_fim(&sc, &ops).unwrap();
        let masked = dc_missing_fim(&sc, vec![vec![true; 3]; 5], &ops).unwrap();
        assert_eq!(total.matrix(), masked.matrix());
        let one = dc_per_sample_fim(&t, &DMatrix::identity(3, 3), &ops).unwrap();
        assert!(linalg::rel_frobenius(total.matrix(), &(one.matrix() * 5.0)) < 1e-14);
    }

    #[test]
    fn masked_weight_is_subblock_inverse() {
        let r = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0]);
        let inv = r.clone().try_inverse().unwrap();
        let w = masked_precision(&r, &inv, Some(&[true, false, true]));
        let sub = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 3.0])
            .try_inverse()
            .unwrap();
        assert!((w[(0, 0)] - sub[(0, 0)]).abs() < 1e-15);
        assert!((w[(2, 0)] - sub[(1, 0)]).abs() < 1e-15);
        assert_eq!(w.row(1).amax(), 0.0);
        let zero = masked_precision(&r, &inv, Some(&[false, false, false]));
        assert_eq!(zero, DMatrix::zeros(3, 3));
    }

    #[test]
    fn fim_does_not_depend_on_alpha_and_score_is_zero_without_noise() {
        let ops = build_reparam_operators(3).unwrap();
        let sc = DcScenario::new(
            vec![
                DVector::from_vec(vec![1.0, 2.0, -1.0]),
                DVector::from_vec(vec![0.5, 0.0, 1.0]),
            ],
            DMatrix::identity(3, 3),
            None,
        )
        .unwrap();
        let l = laplacian_from_alpha(&AlphaVector::from_order(3, vec![-1.0, -0.5, -2.0]).unwrap());
        let p = sc.noiseless(&l);
        assert!(dc_score(&p, &sc, &l).unwrap().amax() < 1e-12);
        let sb = crate::fim::slepian_bangs(&dc_gaussian_jacobians(&sc).unwrap()).unwrap();
        let j = dc_total_fim(&sc, &ops).unwrap();
        assert!(linalg::rel_frobenius(sb.matrix(), j.matrix()) < 1e-12);
        let ja = crate::fim::alpha_fim_from_full(&dc_full_fim(&sc).unwrap(), &ops).unwrap();
        assert!(linalg::rel_frobenius(ja.matrix(), j.matrix()) < 1e-12);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let t = vec![DVector::zeros(3)];
        assert!(DcScenario::new(vec![], DMatrix::identity(3, 3), None).is_err());
        assert!(DcScenario::new(t.clone(), DMatrix::identity(2, 2), None).is_err());
        assert!(DcScenario::new(t.clone(), DMatrix::zeros(3, 3), None).is_err());
        assert!(DcScenario::new(t, DMatrix::identity(3, 3), Some(vec![vec![false; 3]])).is_err());
    }
}
