use nalgebra::DMatrix;

use crate::{Error, Result};

use super::graph::WeightedGraph;
use super::reparam::num_pairs;
use super::support::SupportSelector;

/// Unweighted `M x s` incidence matrix, one column per edge in `alpha` order.
///
/// Column `k` has `+1` at the larger node index and `-1` at the smaller one.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(DMatrix<f64>);

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.0.ncols()
    }
}

pub fn incidence_matrix(g: &WeightedGraph) -> Result<IncidenceMatrix> {
    if g.num_edges() == 0 {
        return Err(Error::EmptyIncidence);
    }
    let mut b = DMatrix::zeros(g.num_nodes(), g.num_edges());
    for (k, e) in g.edges().iter().enumerate() {
        b[(e.i, k)] = 1.0;
        b[(e.j, k)] = -1.0;
    }
    Ok(IncidenceMatrix(b))
}

/// `-sum_m ((B e_m) kron (B E_mm)) U^T`, which equals `Psi U U^T`.
///
/// The leading minus accounts for `U^T alpha` holding the nonpositive
/// off-diagonal entries rather than the positive edge weights.
pub fn psi_from_incidence(b: &IncidenceMatrix, sel: &SupportSelector) -> Result<DMatrix<f64>> {
    let m = b.num_nodes();
    let s = b.num_edges();
    if sel.size() != s || sel.dim() != num_pairs(m) {
        return Err(Error::DimensionMismatch(format!(
            "incidence has {s} edges on {m} nodes, selector has {} of {}",
            sel.size(),
            sel.dim()
        )));
    }
    let bm = b.matrix();
    let mut acc = DMatrix::<f64>::zeros(m * m, s);
    for col in 0..s {
        let b_e = bm.column(col).into_owned();
        let mut b_emm = DMatrix::zeros(m, s);
        b_emm.set_column(col, &b_e);
        acc += b_e.kronecker(&b_emm);
    }
    Ok(-acc * sel.u_mat().transpose())
}
