use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Result};

use super::graph::WeightedGraph;
use super::reparam::{num_pairs, order_from_num_pairs, pairs};

/// Dense `M x M` Laplacian.
///
/// Construction does not enforce the sign constraint on off-diagonal entries,
/// since solvers build intermediate matrices from unconstrained iterates; use
/// [`LaplacianMatrix::check`] to audit the full property set.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

/// Residuals of the Laplacian properties for a given matrix.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianCheck {
    pub symmetry: f64,
    pub row_sum: f64,
    pub max_offdiag: f64,
    pub min_diag: f64,
    pub min_eigenvalue: f64,
}

impl LaplacianCheck {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.symmetry <= tol
            && self.row_sum <= tol
            && self.max_offdiag <= tol
            && self.min_diag >= -tol
            && self.min_eigenvalue >= -tol
    }
}

impl LaplacianMatrix {
    /// Wraps a square matrix after checking symmetry and zero row sums to `tol`.
    pub fn new(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(Error::InvalidDimension(format!(
                "Laplacian must be square with order >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let sym = linalg::max_abs(&(&matrix - matrix.transpose()));
        if sym > tol {
            return Err(Error::ConstraintViolation {
                what: "symmetry",
                residual: sym,
            });
        }
        let rows = row_sum_residual(&matrix);
        if rows > tol {
            return Err(Error::ConstraintViolation {
                what: "zero row sums",
                residual: rows,
            });
        }
        Ok(Self(matrix))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn check(&self) -> LaplacianCheck {
        let m = &self.0;
        let n = m.nrows();
        let mut max_offdiag = f64::NEG_INFINITY;
        let mut min_diag = f64::INFINITY;
        for c in 0..n {
            for r in 0..n {
                if r == c {
                    min_diag = min_diag.min(m[(r, c)]);
                } else {
                    max_offdiag = max_offdiag.max(m[(r, c)]);
                }
            }
        }
        LaplacianCheck {
            symmetry: linalg::max_abs(&(m - m.transpose())),
            row_sum: row_sum_residual(m),
            max_offdiag,
            min_diag,
            min_eigenvalue: linalg::min_eigenvalue(m),
        }
    }
}

fn row_sum_residual(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.sum().abs()).fold(0.0_f64, f64::max)
}

/// The half-vectorization `alpha = Vec_l(L)` of an order-`M` Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    m: usize,
    values: DVector<f64>,
}

impl AlphaVector {
    /// Infers the order from the length, which must be `M(M-1)/2` for `M >= 2`.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        let m = order_from_num_pairs(values.len())?;
        Ok(Self { m, values })
    }

    pub fn from_order(m: usize, values: Vec<f64>) -> Result<Self> {
        if m < 2 || values.len() != num_pairs(m) {
            return Err(Error::InvalidDimension(format!(
                "alpha of length {} does not match order {}",
                values.len(),
                m
            )));
        }
        Ok(Self {
            m,
            values: DVector::from_vec(values),
        })
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::from_order(m, vec![0.0; num_pairs(m)])
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    /// True when every entry is `<= 0`.
    pub fn is_feasible(&self) -> bool {
        self.values.iter().all(|&v| v <= 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Builds `L` with `Vec(L) = Psi * alpha`.
///
/// Off-diagonal `(i, j)` and `(j, i)` take `alpha_k`; each diagonal entry is
/// minus the sum of the `alpha` entries touching that node.
pub fn laplacian_from_alpha(alpha: &AlphaVector) -> LaplacianMatrix {
    let m = alpha.order();
    let mut l = DMatrix::zeros(m, m);
    for (k, (i, j)) in pairs(m).enumerate() {
        let a = alpha.values[k];
        l[(i, j)] = a;
        l[(j, i)] = a;
        l[(i, i)] -= a;
        l[(j, j)] -= a;
    }
    LaplacianMatrix(l)
}

/// Reads `alpha` from the strictly lower triangle after validating symmetry
/// and zero row sums to `1e-9 * max(1, max|L|)`.
pub fn alpha_from_laplacian(l: &LaplacianMatrix) -> Result<AlphaVector> {
    let scale = linalg::max_abs(l.matrix()).max(1.0);
    let checked = LaplacianMatrix::new(l.matrix().clone(), 1e-9 * scale)?;
    let m = checked.order();
    let values = pairs(m).map(|(i, j)| checked.0[(i, j)]).collect();
    AlphaVector::from_order(m, values)
}

pub fn laplacian_from_graph(g: &WeightedGraph) -> LaplacianMatrix {
    let m = g.num_nodes();
    let mut l = DMatrix::zeros(m, m);
    for e in g.edges() {
        l[(e.i, e.j)] -= e.weight;
        l[(e.j, e.i)] -= e.weight;
        l[(e.i, e.i)] += e.weight;
        l[(e.j, e.j)] += e.weight;
    }
    LaplacianMatrix(l)
}
