//! Cramér-Rao lower bounds for graph Laplacian estimation.
//!
//! The estimand is the strictly-lower-triangular half-vectorization `alpha`
//! of a Laplacian `L`. A fixed linear map `Psi` with `Vec(L) = Psi * alpha`
//! enforces symmetry and the null-space property, so every Fisher information
//! matrix here lives either on `Vec(L)` (`M^2` coordinates), on `alpha`
//! (`M(M-1)/2` coordinates) or on a support subset of `alpha`.
//!
//! Module map:
//!
//! * [`graphcore`]: graphs, Laplacians, the reparametrization operators,
//!   support selectors and incidence matrices.
//! * [`fim`]: Fisher information containers, complete and oracle bounds,
//!   the Gaussian (Slepian-Bangs) assembly and Monte Carlo validation helpers.
//! * [`models`]: DC power flow, graph-filter diffusion and Laplacian GMRF
//!   information matrices.
//! * [`estimators`]: constrained maximum likelihood solvers.
//! * [`simharness`]: graph generators, simulators, metrics and the Monte Carlo
//!   experiment driver.
//! * [`cli`]: the subcommands behind the `lapcrb` binary.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod fim;
pub mod graphcore;
pub mod io;
pub mod linalg;
pub mod models;
pub mod simharness;
pub mod validate;

pub use error::{Error, Result};
