use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Number of strictly-lower-triangular entries of an order-`m` matrix.
pub fn num_pairs(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Inverse of [`num_pairs`]; fails unless `len = M(M-1)/2` for some `M >= 2`.
pub fn order_from_num_pairs(len: usize) -> Result<usize> {
    let m = ((1.0 + (1.0 + 8.0 * len as f64).sqrt()) / 2.0).round() as usize;
    if m >= 2 && num_pairs(m) == len {
        Ok(m)
    } else {
        Err(Error::InvalidDimension(format!(
            "length {len} is not of the form M(M-1)/2 with M >= 2"
        )))
    }
}

/// Position of 0-based pair `(i, j)`, `i > j`, in the column-major lower triangle.
pub fn pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i > j && i < m);
    j * m - j * (j + 1) / 2 + (i - j - 1)
}

/// Inverse of [`pair_index`].
pub fn index_pair(m: usize, k: usize) -> (usize, usize) {
    let mut j = 0;
    let mut start = 0;
    loop {
        let len = m - j - 1;
        if k < start + len {
            return (j + 1 + (k - start), j);
        }
        start += len;
        j += 1;
    }
}

/// All 0-based pairs `(i, j)`, `i > j`, in `alpha` order.
pub fn pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |j| (j + 1..m).map(move |i| (i, j)))
}

/// The operators `Psi_l`, `Psi_d`, `Psi_u`, `P` and `Psi` for order `M`.
///
/// Column `k` of `Psi` is `-Vec(d_k d_k^T)` with `d_k = e_{i_k} - e_{j_k}`.
/// The dense matrices are `M^2 x M(M-1)/2` and are materialized on first
/// access; the structured helpers [`psi_t_kron_psi`] and [`psi_t_vec`] never
/// touch them.
#[derive(Debug)]
pub struct ReparamOperators {
    m: usize,
    psi_l: OnceLock<DMatrix<f64>>,
    psi_u: OnceLock<DMatrix<f64>>,
    psi_d: OnceLock<DMatrix<f64>>,
    p_mat: OnceLock<DMatrix<f64>>,
    psi: OnceLock<DMatrix<f64>>,
}

pub fn build_reparam_operators(m: usize) -> Result<ReparamOperators> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!(
            "reparametrization needs M >= 2, got {m}"
        )));
    }
    Ok(ReparamOperators {
        m,
        psi_l: OnceLock::new(),
        psi_u: OnceLock::new(),
        psi_d: OnceLock::new(),
        p_mat: OnceLock::new(),
        psi: OnceLock::new(),
    })
}

impl Clone for ReparamOperators {
    fn clone(&self) -> Self {
        build_reparam_operators(self.m).expect("order already validated")
    }
}

impl ReparamOperators {
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn num_params(&self) -> usize {
        num_pairs(self.m)
    }

    /// Columns `Vec(e_i e_j^T)` over lower-triangle pairs.
    pub fn psi_l(&self) -> &DMatrix<f64> {
        self.psi_l.get_or_init(|| {
            let m = self.m;
            let mut out = DMatrix::zeros(m * m, num_pairs(m));
            for (k, (i, j)) in pairs(m).enumerate() {
                out[(j * m + i, k)] = 1.0;
            }
            out
        })
    }

    /// Columns `Vec(e_j e_i^T)`, the transposed positions of `psi_l`.
    pub fn psi_u(&self) -> &DMatrix<f64> {
        self.psi_u.get_or_init(|| {
            let m = self.m;
            let mut out = DMatrix::zeros(m * m, num_pairs(m));
            for (k, (i, j)) in pairs(m).enumerate() {
                out[(i * m + j, k)] = 1.0;
            }
            out
        })
    }

    /// Columns `Vec(e_m e_m^T)`.
    pub fn psi_d(&self) -> &DMatrix<f64> {
        self.psi_d.get_or_init(|| {
            let m = self.m;
            let mut out = DMatrix::zeros(m * m, m);
            for d in 0..m {
                out[(d * m + d, d)] = 1.0;
            }
            out
        })
    }

    /// `P[i, k] = -(delta(i, i_k) + delta(i, j_k))`.
    pub fn p_mat(&self) -> &DMatrix<f64> {
        self.p_mat.get_or_init(|| {
            let m = self.m;
            let mut out = DMatrix::zeros(m, num_pairs(m));
            for (k, (i, j)) in pairs(m).enumerate() {
                out[(i, k)] = -1.0;
                out[(j, k)] = -1.0;
            }
            out
        })
    }

    /// `Psi = Psi_l + Psi_d P + Psi_u`.
    pub fn psi(&self) -> &DMatrix<f64> {
        self.psi
            .get_or_init(|| self.psi_l() + self.psi_d() * self.p_mat() + self.psi_u())
    }
}

/// `[d_k^T A d_l]` over all pairs of `alpha` positions, `d_k = e_{i_k} - e_{j_k}`.
pub fn pair_gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let idx: Vec<(usize, usize)> = pairs(m).collect();
    let n = idx.len();
    DMatrix::from_fn(n, n, |k, l| {
        let (ik, jk) = idx[k];
        let (il, jl) = idx[l];
        a[(ik, il)] - a[(ik, jl)] - a[(jk, il)] + a[(jk, jl)]
    })
}

/// `Psi^T (A kron B) Psi` without forming `Psi` or the Kronecker product.
///
/// Uses `[Psi^T (A kron B) Psi]_{kl} = (d_k^T B d_l)(d_k^T A d_l)`.
pub fn psi_t_kron_psi(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.shape(), b.shape(), "kron factors must have equal shape");
    let qa = pair_gram(a);
    if std::ptr::eq(a, b) {
        return qa.component_mul(&qa);
    }
    qa.component_mul(&pair_gram(b))
}

/// `Psi^T Vec(X)` for square `X`: entry `k` is `-(d_k^T X d_k)` with the
/// off-diagonal pair counted from both triangles.
pub fn psi_t_vec(x: &DMatrix<f64>) -> DVector<f64> {
    let m = x.nrows();
    DVector::from_iterator(
        num_pairs(m),
        pairs(m).map(|(i, j)| x[(i, j)] + x[(j, i)] - x[(i, i)] - x[(j, j)]),
    )
}

/// [`psi_t_vec`] applied to a vector holding `Vec(X)` for an order-`m` `X`.
pub fn psi_t_vec_sym(v: &DVector<f64>, m: usize) -> DVector<f64> {
    psi_t_vec(&DMatrix::from_column_slice(m, m, v.as_slice()))
}
