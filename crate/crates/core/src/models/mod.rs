//! Application-specific Fisher information builders.

pub mod dcpower;
pub mod diffusion;
pub mod lgmrf;

pub use dcpower::{
    dc_full_fim, dc_gaussian_jacobians, dc_missing_fim, dc_per_sample_fim, dc_score, dc_total_fim,
    mean_jacobian, DcScenario,
};
pub use diffusion::{
    diffusion_cov_jacobian, diffusion_covariance, diffusion_fim, diffusion_fim_quadruple_sum,
    diffusion_fim_stationary, diffusion_gaussian_jacobians, diffusion_score_fn, filter_matrix,
    DiffusionScenario,
};
pub use lgmrf::{
    correction_matrix, lgmrf_fim, lgmrf_full_fim, lgmrf_gaussian_jacobians, lgmrf_grad,
    lgmrf_grad_with_sign, lgmrf_loglik, lgmrf_loglik_with_sign, lgmrf_sample_score,
    shifted_inverse, LgmrfScenario, LogDetSign, Partition,
};
