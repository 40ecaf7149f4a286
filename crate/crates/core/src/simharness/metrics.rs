use nalgebra::DVector;

use crate::graphcore::SupportSelector;
use crate::{Error, Result};

fn check_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} entries, truth has {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Squared error, summed over `support` when given.
pub fn metric_mse(
    alpha_hat: &DVector<f64>,
    alpha: &DVector<f64>,
    support: Option<&SupportSelector>,
) -> Result<f64> {
    check_len(alpha_hat, alpha)?;
    let diff = alpha_hat - alpha;
    match support {
        Some(s) => {
            if s.dim() != diff.len() {
                return Err(Error::DimensionMismatch(format!(
                    "support over {} coordinates for {} entries",
                    s.dim(),
                    diff.len()
                )));
            }
            Ok(s.indices().iter().map(|&k| diff[k] * diff[k]).sum())
        }
        None => Ok(diff.norm_squared()),
    }
}

/// `||alpha_hat - alpha|| / ||alpha||`.
pub fn metric_re(alpha_hat: &DVector<f64>, alpha: &DVector<f64>) -> Result<f64> {
    check_len(alpha_hat, alpha)?;
    let norm = alpha.norm();
    if norm == 0.0 {
        return Err(Error::EmptyInput(
            "relative error against a zero vector".into(),
        ));
    }
    Ok((alpha_hat - alpha).norm() / norm)
}

/// F1 score of a recovered index set against the true one; two empty sets
/// score 1.
pub fn support_f1(recovered: &[usize], truth: &[usize]) -> f64 {
    if recovered.is_empty() && truth.is_empty() {
        return 1.0;
    }
    let hits = recovered.iter().filter(|k| truth.contains(k)).count() as f64;
    2.0 * hits / (recovered.len() + truth.len()) as f64
}
