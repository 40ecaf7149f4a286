use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graphcore::{LaplacianMatrix, WeightedGraph};
use crate::models::{filter_matrix, DcScenario, DiffusionScenario, Partition};
use crate::{Error, Result};

use super::seed::mix;

/// Eigenvalues below this fraction of the largest are treated as zero.
const NULL_REL_TOL: f64 = 1e-10;

fn normal_vector(m: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(m, |_, _| StandardNormal.sample(rng))
}

/// Noise variance putting `sum ||L theta[n]||^2 / (M N sigma^2)` at `snr_db`.
pub fn dc_noise_variance(l: &LaplacianMatrix, thetas: &[DVector<f64>], snr_db: f64) -> Result<f64> {
    let m = l.order();
    let energy: f64 = thetas.iter().map(|t| (l.matrix() * t).norm_squared()).sum();
    let sigma2 = energy / (m * thetas.len()) as f64 / 10f64.powf(snr_db / 10.0);
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InfeasibleSpec(format!(
            "SNR {snr_db} dB gives noise variance {sigma2}"
        )));
    }
    Ok(sigma2)
}

/// Standard normal excitations and white noise at the requested SNR.
pub fn dc_scenario(g: &WeightedGraph, snr_db: f64, n: usize, seed: u64) -> Result<DcScenario> {
    if n == 0 {
        return Err(Error::EmptyInput("need at least one sample".into()));
    }
    let m = g.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thetas: Vec<DVector<f64>> = (0..n).map(|_| normal_vector(m, &mut rng)).collect();
    let sigma2 = dc_noise_variance(&g.laplacian(), &thetas, snr_db)?;
    DcScenario::new(thetas, DMatrix::identity(m, m) * sigma2, None)
}

/// `p[n] = L theta[n] + eta[n]` with `eta[n] ~ N(0, R)`, one sample per row.
pub fn dc_observations(l: &LaplacianMatrix, sc: &DcScenario, seed: u64) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(sc.noise_cov().clone())
        .ok_or_else(|| Error::NotPositiveDefinite("noise covariance".into()))?;
    let factor = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = sc.noiseless(l);
    for n in 0..sc.num_samples() {
        let eta = &factor * normal_vector(sc.order(), &mut rng);
        let mut row = obs.row_mut(n);
        row += eta.transpose();
    }
    Ok(obs)
}

/// Scenario and observations from one seed.
pub fn simulate_dc(
    g: &WeightedGraph,
    snr_db: f64,
    n: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DcScenario)> {
    let sc = dc_scenario(g, snr_db, n, seed)?;
    let obs = dc_observations(&g.laplacian(), &sc, mix(seed, 1))?;
    Ok((obs, sc))
}

/// `V sqrt(Lambda^+) V^T` for a PSD matrix, zero eigenvalues dropped.
fn pinv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.amax();
    let d = eig.eigenvalues.map(|v| {
        if v > NULL_REL_TOL * top {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    });
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn check_components(g: &WeightedGraph, components: Option<&Partition>) -> Result<()> {
    let actual = Partition::detect(&g.laplacian());
    match components {
        None if actual.num_components() > 1 => Err(Error::ComponentSpecification(format!(
            "graph has {} components but none were declared",
            actual.num_components()
        ))),
        Some(p) if *p != actual => Err(Error::ComponentSpecification(
            "declared components do not match the graph".into(),
        )),
        _ => Ok(()),
    }
}

/// `n` draws from `N(0, L^+)`, one per row.
pub fn lgmrf_samples(
    g: &WeightedGraph,
    n: usize,
    seed: u64,
    components: Option<&Partition>,
) -> Result<DMatrix<f64>> {
    check_components(g, components)?;
    let a = pinv_sqrt(g.laplacian().matrix());
    Ok(draw_rows(&a, n, seed))
}

fn draw_rows(factor: &DMatrix<f64>, n: usize, seed: u64) -> DMatrix<f64> {
    let m = factor.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        out.set_row(i, &(factor * normal_vector(m, &mut rng)).transpose());
    }
    out
}

/// `(1/n) sum x x^T` over the rows of `samples`.
pub fn sample_covariance(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if samples.nrows() == 0 {
        return Err(Error::EmptyInput("no samples".into()));
    }
    Ok(samples.transpose() * samples / samples.nrows() as f64)
}

/// Empirical covariance of `n` LGMRF draws.
pub fn simulate_lgmrf(
    g: &WeightedGraph,
    n: usize,
    seed: u64,
    components: Option<&Partition>,
) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput("need at least one sample".into()));
    }
    sample_covariance(&lgmrf_samples(g, n, seed, components)?)
}

/// `n` draws of `H z`, `z ~ N(0, C_z)`, one per row.
pub fn diffusion_samples(
    g: &WeightedGraph,
    sc: &DiffusionScenario,
    n: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let h = filter_matrix(&g.laplacian(), sc.taps())?;
    Ok(draw_rows(&(h * psd_sqrt(sc.input_cov())), n, seed))
}

/// Empirical covariance of `n` diffusion outputs.
pub fn simulate_diffusion(
    g: &WeightedGraph,
    sc: &DiffusionScenario,
    n: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput("need at least one sample".into()));
    }
    sample_covariance(&diffusion_samples(g, sc, n, seed)?)
}
