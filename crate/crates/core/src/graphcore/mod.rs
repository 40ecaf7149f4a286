//! Graphs, Laplacians and the symmetric/null-space reparametrization.
//!
//! Index convention: nodes are 0-based internally and 1-based in files.
//! The half-vectorization `alpha` lists the strictly lower triangle column by
//! column: `(2,1), (3,1), ..., (M,1), (3,2), ..., (M,M-1)` in 1-based terms.

mod graph;
mod incidence;
mod laplacian;
mod reparam;
mod support;

pub use graph::{Edge, WeightedGraph};
pub use incidence::{incidence_matrix, psi_from_incidence, IncidenceMatrix};
pub use laplacian::{
    alpha_from_laplacian, laplacian_from_alpha, laplacian_from_graph, AlphaVector, LaplacianCheck,
    LaplacianMatrix,
};
pub use reparam::{
    build_reparam_operators, index_pair, num_pairs, order_from_num_pairs, pair_gram, pair_index,
    pairs, psi_t_kron_psi, psi_t_vec, psi_t_vec_sym, ReparamOperators,
};
pub use support::{support_selector, SupportSelector, DEFAULT_ZERO_TOL};
