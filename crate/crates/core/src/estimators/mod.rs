//! Constrained maximum-likelihood Laplacian estimators.

mod config;
mod dc;
mod lgmrf;
mod qp;

pub use config::{recovered_support, EstimateResult, SolverConfig};
pub use dc::{dc_cmle, dc_cmle_admm, dc_oracle_cmle};
pub use lgmrf::{lgmrf_oracle_pgd, lgmrf_pgd};
