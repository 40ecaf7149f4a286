//! Fisher information containers and the bounds derived from them.

mod crb;
mod gaussian;
mod info;

pub use crb::{crb_complete, efficiency_residual, oracle_crb, psd_order_gap, CrbReport};
pub use gaussian::{empirical_fim, slepian_bangs, GaussianModelJacobians};
pub use info::{alpha_fim_from_full, FisherInfo, ParamSpace};
