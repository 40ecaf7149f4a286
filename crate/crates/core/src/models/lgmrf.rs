//! Laplacian-constrained Gaussian Markov random field: `x[n] ~ N(0, L^+)`.
//!
//! The pseudo-determinant is handled through `|L|_+ = |L + D|`, with
//! `D = 11^T / M` for connected graphs and `D = sum_k 1_k 1_k^T / M_k` over
//! the declared connected components otherwise.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::fim::{FisherInfo, GaussianModelJacobians, ParamSpace};
use crate::graphcore::{
    num_pairs, pairs, psi_t_kron_psi, psi_t_vec, LaplacianMatrix, ReparamOperators,
};
use crate::linalg;
use crate::{Error, Result};

/// Tolerance for calling a Laplacian entry an edge when detecting components.
pub const COMPONENT_EDGE_TOL: f64 = 1e-9;

/// Assignment of every node to one of `K` components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Component labels per node; relabeled `0..K` in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("partition has no nodes".into()));
        }
        let mut map = HashMap::new();
        let mut out = Vec::with_capacity(labels.len());
        let mut sizes = Vec::new();
        for &l in labels {
            let next = map.len();
            let c = *map.entry(l).or_insert(next);
            if c == sizes.len() {
                sizes.push(0);
            }
            sizes[c] += 1;
            out.push(c);
        }
        Ok(Self { labels: out, sizes })
    }

    /// Connected components of the graph with edges where `|L_ij| > 1e-9`.
    pub fn detect(l: &LaplacianMatrix) -> Self {
        let m = l.order();
        let mut label = vec![usize::MAX; m];
        let mut next = 0;
        for start in 0..m {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for v in 0..m {
                    if v != u
                        && label[v] == usize::MAX
                        && l.matrix()[(u, v)].abs() > COMPONENT_EDGE_TOL
                    {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        Self::from_labels(&label).expect("order >= 2")
    }

    /// Reads `node,component` rows with 1-based node labels; every node
    /// `1..=M` must appear exactly once.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let source = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(crate::io::open_file(path)?);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "node" || &headers[1] != "component" {
            return Err(Error::parse(&source, 1, "expected header `node,component`"));
        }
        let mut rows: Vec<(usize, String, u64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 2 {
                return Err(Error::parse(&source, line, "expected 2 fields"));
            }
            let node: usize = rec[0].parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
                Error::parse(&source, line, format!("bad node label `{}`", &rec[0]))
            })?;
            rows.push((node, rec[1].to_string(), line));
        }
        let m = rows.iter().map(|r| r.0).max().unwrap_or(0);
        if m == 0 {
            return Err(Error::parse(&source, 0, "partition file has no rows"));
        }
        let mut comp: Vec<Option<String>> = vec![None; m];
        let mut first_line = vec![0u64; m];
        for (node, c, line) in rows {
            if comp[node - 1].is_some() {
                return Err(Error::parse(
                    &source,
                    line,
                    format!(
                        "node {node} already assigned on line {}",
                        first_line[node - 1]
                    ),
                ));
            }
            comp[node - 1] = Some(c);
            first_line[node - 1] = line;
        }
        if let Some(missing) = comp.iter().position(|c| c.is_none()) {
            return Err(Error::parse(
                &source,
                0,
                format!("node {} has no component", missing + 1),
            ));
        }
        let mut ids = HashMap::new();
        let labels: Vec<usize> = comp
            .into_iter()
            .map(|c| {
                let next = ids.len();
                *ids.entry(c.expect("checked")).or_insert(next)
            })
            .collect();
        Self::from_labels(&labels)
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
}

/// Sample count and optional component declaration.
#[derive(Debug, Clone)]
pub struct LgmrfScenario {
    pub n_samples: usize,
    pub components: Option<Partition>,
}

impl LgmrfScenario {
    pub fn new(n_samples: usize, components: Option<Partition>) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidDimension(
                "LGMRF needs at least one sample".into(),
            ));
        }
        Ok(Self {
            n_samples,
            components,
        })
    }

    pub fn connected(n_samples: usize) -> Result<Self> {
        Self::new(n_samples, None)
    }
}

/// Sign of the log-determinant term in the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogDetSign {
    /// `+ N/2 log|L + D|`, the Gaussian likelihood.
    #[default]
    Plus,
    /// `- N/2 log|L + D|`, kept for auditing the alternative sign.
    Minus,
}

impl LogDetSign {
    fn factor(self) -> f64 {
        match self {
            LogDetSign::Plus => 1.0,
            LogDetSign::Minus => -1.0,
        }
    }
}

/// `D = sum_k 1_k 1_k^T / M_k`; a single component gives `11^T / M`.
pub fn correction_matrix(m: usize, components: Option<&Partition>) -> Result<DMatrix<f64>> {
    match components {
        None => Ok(DMatrix::from_element(m, m, 1.0 / m as f64)),
        Some(p) => {
            if p.order() != m {
                return Err(Error::DimensionMismatch(format!(
                    "partition covers {} nodes, graph has {m}",
                    p.order()
                )));
            }
            let lab = p.labels();
            Ok(DMatrix::from_fn(m, m, |a, b| {
                if lab[a] == lab[b] {
                    1.0 / p.sizes()[lab[a]] as f64
                } else {
                    0.0
                }
            }))
        }
    }
}

/// `(L + D)^{-1}`, which equals `L^+ + D`, after checking that the component
/// declaration matches the graph.
pub fn shifted_inverse(
    l: &LaplacianMatrix,
    components: Option<&Partition>,
) -> Result<DMatrix<f64>> {
    let m = l.order();
    let d = correction_matrix(m, components)?;
    if let Some(p) = components {
        let lab = p.labels();
        for a in 0..m {
            for b in 0..a {
                if lab[a] != lab[b] && l.matrix()[(a, b)].abs() > COMPONENT_EDGE_TOL {
                    return Err(Error::ComponentSpecification(format!(
                        "edge ({}, {}) joins components {} and {}",
                        a + 1,
                        b + 1,
                        lab[a],
                        lab[b]
                    )));
                }
            }
        }
    }
    let shifted = l.matrix() + d;
    let rcond = linalg::psd_rcond(&shifted);
    let min = linalg::min_eigenvalue(&shifted);
    if rcond < linalg::SINGULAR_RCOND || min <= 0.0 {
        let declared = components.map_or(1, |p| p.num_components());
        let actual = Partition::detect(l).num_components();
        return Err(Error::ComponentSpecification(format!(
            "L + D is singular (rcond {rcond:.3e}); {declared} component(s) declared, graph has {actual}"
        )));
    }
    linalg::spd_inverse(&shifted, "L + D")
        .map_err(|_| Error::ComponentSpecification("L + D is not positive definite".into()))
}

/// `J_alpha = N/2 Psi^T ((L + D)^{-1} kron (L + D)^{-1}) Psi`.
pub fn lgmrf_fim(
    l: &LaplacianMatrix,
    sc: &LgmrfScenario,
    ops: &ReparamOperators,
) -> Result<FisherInfo> {
    let m = l.order();
    if ops.order() != m {
        return Err(Error::DimensionMismatch(format!(
            "operators of order {} used with a Laplacian of order {m}",
            ops.order()
        )));
    }
    let a = shifted_inverse(l, sc.components.as_ref())?;
    let fim = psi_t_kron_psi(&a, &a) * (sc.n_samples as f64 / 2.0);
    FisherInfo::new(linalg::symmetrize(&fim), ParamSpace::Alpha, m)
}

/// `J_L = N/2 (L + D)^{-1} kron (L + D)^{-1}` on `Vec(L)`.
pub fn lgmrf_full_fim(l: &LaplacianMatrix, sc: &LgmrfScenario) -> Result<FisherInfo> {
    let a = shifted_inverse(l, sc.components.as_ref())?;
    let fim = a.kronecker(&a) * (sc.n_samples as f64 / 2.0);
    FisherInfo::new(linalg::symmetrize(&fim), ParamSpace::FullL, l.order())
}

fn check_cov(emp_cov: &DMatrix<f64>, l: &LaplacianMatrix) -> Result<()> {
    if emp_cov.shape() != (l.order(), l.order()) {
        return Err(Error::DimensionMismatch(format!(
            "empirical covariance {:?} for a Laplacian of order {}",
            emp_cov.shape(),
            l.order()
        )));
    }
    Ok(())
}

/// `N/2 log|L + D| - N/2 tr(L S)` up to a constant.
pub fn lgmrf_loglik(
    emp_cov: &DMatrix<f64>,
    l: &LaplacianMatrix,
    n_samples: usize,
    components: Option<&Partition>,
) -> Result<f64> {
    lgmrf_loglik_with_sign(emp_cov, l, n_samples, components, LogDetSign::Plus)
}

pub fn lgmrf_loglik_with_sign(
    emp_cov: &DMatrix<f64>,
    l: &LaplacianMatrix,
    n_samples: usize,
    components: Option<&Partition>,
    sign: LogDetSign,
) -> Result<f64> {
    check_cov(emp_cov, l)?;
    let shifted = l.matrix() + correction_matrix(l.order(), components)?;
    let chol = Cholesky::new(linalg::symmetrize(&shifted))
        .ok_or_else(|| Error::NotPositiveDefinite("L + D".into()))?;
    let logdet: f64 = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|x| x.ln())
            .sum::<f64>();
    let half_n = n_samples as f64 / 2.0;
    Ok(half_n * (sign.factor() * logdet - (l.matrix().component_mul(emp_cov)).sum()))
}

/// `N/2 Psi^T Vec((L + D)^{-1} - S)`.
pub fn lgmrf_grad(
    emp_cov: &DMatrix<f64>,
    l: &LaplacianMatrix,
    n_samples: usize,
    components: Option<&Partition>,
) -> Result<DVector<f64>> {
    lgmrf_grad_with_sign(emp_cov, l, n_samples, components, LogDetSign::Plus)
}

pub fn lgmrf_grad_with_sign(
    emp_cov: &DMatrix<f64>,
    l: &LaplacianMatrix,
    n_samples: usize,
    components: Option<&Partition>,
    sign: LogDetSign,
) -> Result<DVector<f64>> {
    check_cov(emp_cov, l)?;
    let shifted = l.matrix() + correction_matrix(l.order(), components)?;
    let inv = linalg::spd_inverse(&shifted, "L + D")?;
    let g = inv * sign.factor() - emp_cov;
    Ok(psi_t_vec(&g) * (n_samples as f64 / 2.0))
}

/// Single-sample score `1/2 ((d_k^T x)^2 - d_k^T A d_k)` with `A = (L + D)^{-1}`.
pub fn lgmrf_sample_score(x: &DVector<f64>, shifted_inv: &DMatrix<f64>) -> DVector<f64> {
    let m = x.len();
    DVector::from_iterator(
        num_pairs(m),
        pairs(m).map(|(i, j)| {
            let dx = x[i] - x[j];
            let q = shifted_inv[(i, i)] + shifted_inv[(j, j)] - 2.0 * shifted_inv[(i, j)];
            0.5 * (dx * dx - q)
        }),
    )
}

/// Jacobians of one sample under the equivalent full-rank model
/// `N(0, (L + D)^{-1})`; the `N`-sample FIM is `N` times the result.
pub fn lgmrf_gaussian_jacobians(
    l: &LaplacianMatrix,
    sc: &LgmrfScenario,
) -> Result<GaussianModelJacobians> {
    let m = l.order();
    let a = shifted_inverse(l, sc.components.as_ref())?;
    let k = num_pairs(m);
    let mut jac = DMatrix::zeros(m * m, k);
    for (c, (i, j)) in pairs(m).enumerate() {
        // dC = -A dL A with dL = -d d^T
        let ad = a.column(i) - a.column(j);
        let dc = &ad * ad.transpose();
        jac.column_mut(c).copy_from_slice(dc.as_slice());
    }
    GaussianModelJacobians::new(DMatrix::zeros(m, k), jac, a, ParamSpace::Alpha, m)
}
