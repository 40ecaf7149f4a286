use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::estimators::{
    dc_cmle, dc_cmle_admm, dc_oracle_cmle, lgmrf_oracle_pgd, lgmrf_pgd, EstimateResult,
};
use crate::fim::{crb_complete, oracle_crb, CrbReport};
use crate::graphcore::{
    build_reparam_operators, AlphaVector, ReparamOperators, SupportSelector, WeightedGraph,
};
use crate::models::{
    dc_full_fim, dc_total_fim, diffusion_fim, lgmrf_fim, lgmrf_full_fim, DcScenario,
    DiffusionScenario, LgmrfScenario,
};
use crate::Result;

use super::config::{EstimatorKind, ExperimentConfig, ModelKind};
use super::graphs::generate_graph;
use super::metrics::{metric_mse, metric_re, support_f1};
use super::seed::{mix, trial_seed};
use super::simulate::{dc_observations, dc_scenario, simulate_lgmrf};

const SCENARIO_SALT: u64 = 0x5CE7_A210;

/// One estimator run. A failed run has `error` set and NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sweep_value: f64,
    pub trial: usize,
    pub estimator: EstimatorKind,
    pub mse: f64,
    pub re: f64,
    pub support_f1: f64,
    pub converged: bool,
    pub error: Option<String>,
}

/// Bounds at one sweep point.
#[derive(Debug, Clone)]
pub struct SweepBounds {
    pub sweep_value: f64,
    pub samples: usize,
    pub oracle: CrbReport,
    pub complete: CrbReport,
}

/// Mean and standard error of successful trials of one estimator at one
/// sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub estimator: EstimatorKind,
    pub trials: usize,
    pub failed: usize,
    pub mean_mse: f64,
    pub se_mse: f64,
    pub mean_re: f64,
    pub se_re: f64,
    pub mean_support_f1: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub graph: WeightedGraph,
    pub alpha: AlphaVector,
    pub bounds: Vec<SweepBounds>,
    /// Sorted by sweep point, trial, then estimator.
    pub records: Vec<TrialRecord>,
}

impl ExperimentOutput {
    /// Bound-predicted relative error `sqrt(tr B2) / ||alpha||` of the oracle
    /// bounds, per sweep point.
    pub fn predicted_re(&self) -> Vec<Option<f64>> {
        let norm = self.alpha.norm();
        self.bounds
            .iter()
            .map(|b| b.oracle.trace_b2.map(|t| t.sqrt() / norm))
            .collect()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for b in &self.bounds {
            let mut kinds: Vec<EstimatorKind> = self
                .records
                .iter()
                .filter(|r| r.sweep_value == b.sweep_value)
                .map(|r| r.estimator)
                .collect();
            kinds.sort_unstable();
            kinds.dedup();
            for kind in kinds {
                let all: Vec<&TrialRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.sweep_value == b.sweep_value && r.estimator == kind)
                    .collect();
                let ok: Vec<&&TrialRecord> = all.iter().filter(|r| r.error.is_none()).collect();
                let (mean_mse, se_mse) = mean_se(ok.iter().map(|r| r.mse));
                let (mean_re, se_re) = mean_se(ok.iter().map(|r| r.re));
                let (mean_support_f1, _) = mean_se(ok.iter().map(|r| r.support_f1));
                rows.push(SummaryRow {
                    sweep_value: b.sweep_value,
                    estimator: kind,
                    trials: all.len(),
                    failed: all.len() - ok.len(),
                    mean_mse,
                    se_mse,
                    mean_re,
                    se_re,
                    mean_support_f1,
                });
            }
        }
        rows
    }
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn record(
    sweep_value: f64,
    trial: usize,
    estimator: EstimatorKind,
    result: Result<EstimateResult>,
    alpha: &AlphaVector,
    truth: &[usize],
) -> TrialRecord {
    let scored = result.and_then(|r| {
        let hat = r.alpha_hat.values();
        let f1 = support_f1(r.support_recovered.as_deref().unwrap_or(&[]), truth);
        Ok((
            metric_mse(hat, alpha.values(), None)?,
            metric_re(hat, alpha.values())?,
            f1,
            r.converged,
        ))
    });
    match scored {
        Ok((mse, re, support_f1, converged)) => TrialRecord {
            sweep_value,
            trial,
            estimator,
            mse,
            re,
            support_f1,
            converged,
            error: None,
        },
        Err(e) => TrialRecord {
            sweep_value,
            trial,
            estimator,
            mse: f64::NAN,
            re: f64::NAN,
            support_f1: f64::NAN,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    ops: &'a ReparamOperators,
    graph: &'a WeightedGraph,
    alpha: &'a AlphaVector,
    support: &'a SupportSelector,
    sweep_index: usize,
    sweep_value: f64,
    samples: usize,
}

impl Point<'_> {
    fn dc_trial(&self, sc: &DcScenario, trial: usize) -> Vec<TrialRecord> {
        let seed = trial_seed(self.cfg.seed, self.sweep_index, trial);
        let obs = match dc_observations(&self.graph.laplacian(), sc, seed) {
            Ok(o) => o,
            Err(e) => return self.failed(trial, e.to_string()),
        };
        self.cfg
            .estimators
            .iter()
            .map(|&kind| {
                let s = &self.cfg.solver;
                let res = match kind {
                    EstimatorKind::Cmle => dc_cmle(&obs, sc, s, self.ops),
                    EstimatorKind::CmleAdmm => dc_cmle_admm(&obs, sc, s, self.ops),
                    EstimatorKind::OracleCmle => {
                        dc_oracle_cmle(&obs, sc, self.support, s, self.ops)
                    }
                    _ => unreachable!("validated"),
                };
                record(
                    self.sweep_value,
                    trial,
                    kind,
                    res,
                    self.alpha,
                    self.support.indices(),
                )
            })
            .collect()
    }

    fn lgmrf_trial(&self, trial: usize) -> Vec<TrialRecord> {
        let seed = trial_seed(self.cfg.seed, self.sweep_index, trial);
        let cov = match simulate_lgmrf(self.graph, self.samples, seed, None) {
            Ok(c) => c,
            Err(e) => return self.failed(trial, e.to_string()),
        };
        self.cfg
            .estimators
            .iter()
            .map(|&kind| {
                let s = &self.cfg.solver;
                let res = match kind {
                    EstimatorKind::Pgd => lgmrf_pgd(&cov, self.samples, s, self.ops),
                    EstimatorKind::OraclePgd => {
                        lgmrf_oracle_pgd(&cov, self.samples, self.support, s, self.ops)
                    }
                    _ => unreachable!("validated"),
                };
                record(
                    self.sweep_value,
                    trial,
                    kind,
                    res,
                    self.alpha,
                    self.support.indices(),
                )
            })
            .collect()
    }

    fn failed(&self, trial: usize, msg: String) -> Vec<TrialRecord> {
        self.cfg
            .estimators
            .iter()
            .map(|&kind| {
                record(
                    self.sweep_value,
                    trial,
                    kind,
                    Err(crate::Error::EmptyInput(msg.clone())),
                    self.alpha,
                    &[],
                )
            })
            .collect()
    }
}

fn bounds(
    j_alpha: &crate::fim::FisherInfo,
    j_full: Option<&crate::fim::FisherInfo>,
    support: &SupportSelector,
    ops: &ReparamOperators,
) -> Result<(CrbReport, CrbReport)> {
    Ok((
        oracle_crb(j_alpha, support)?,
        crb_complete(j_alpha, j_full, ops)?,
    ))
}

/// Runs every sweep point: bounds once, then `trials` seeded datasets in
/// parallel. Output does not depend on thread scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let graph = generate_graph(&cfg.graph, cfg.graph_seed)?;
    let m = graph.num_nodes();
    let ops = build_reparam_operators(m)?;
    let alpha = graph.alpha();
    let support = SupportSelector::from_indices(ops.num_params(), graph.support())?;
    let l = graph.laplacian();
    let scenario_seed = mix(cfg.seed, SCENARIO_SALT);
    let mut all_bounds = Vec::new();
    let mut records = Vec::new();
    for (sweep_index, &sweep_value) in cfg.sweep.iter().enumerate() {
        let samples = cfg.samples_at(sweep_value, m);
        let point = Point {
            cfg,
            ops: &ops,
            graph: &graph,
            alpha: &alpha,
            support: &support,
            sweep_index,
            sweep_value,
            samples,
        };
        let (oracle, complete, batch): (CrbReport, CrbReport, Vec<Vec<TrialRecord>>) = match cfg
            .model
        {
            ModelKind::Dc => {
                // same excitations at every SNR; only the noise level moves
                let sc = dc_scenario(&graph, sweep_value, samples, scenario_seed)?;
                let j = dc_total_fim(&sc, &ops)?;
                let jl = dc_full_fim(&sc)?;
                let (o, c) = bounds(&j, Some(&jl), &support, &ops)?;
                let batch = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| point.dc_trial(&sc, t))
                    .collect();
                (o, c, batch)
            }
            ModelKind::Lgmrf => {
                let sc = LgmrfScenario::connected(samples)?;
                let j = lgmrf_fim(&l, &sc, &ops)?;
                let jl = lgmrf_full_fim(&l, &sc)?;
                let (o, c) = bounds(&j, Some(&jl), &support, &ops)?;
                let batch = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| point.lgmrf_trial(t))
                    .collect();
                (o, c, batch)
            }
            ModelKind::Diffusion => {
                let sc = DiffusionScenario::new(cfg.filter_taps.clone(), DMatrix::identity(m, m))?;
                let j = diffusion_fim(&l, &sc, &ops)?.scaled(samples as f64);
                let (o, c) = bounds(&j, None, &support, &ops)?;
                (o, c, Vec::new())
            }
        };
        records.extend(batch.into_iter().flatten());
        all_bounds.push(SweepBounds {
            sweep_value,
            samples,
            oracle,
            complete,
        });
    }
    Ok(ExperimentOutput {
        graph,
        alpha,
        bounds: all_bounds,
        records,
    })
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn trials_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from("sweep_value,trial,estimator,mse,re,support_f1,converged\n");
    for r in &out.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.sweep_value,
            r.trial,
            r.estimator,
            num(r.mse),
            num(r.re),
            num(r.support_f1),
            r.converged
        );
    }
    s
}

/// Oracle bounds per sweep point.
pub fn bounds_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from("sweep_value,trace_b1,trace_b2,exists_b1,exists_b2\n");
    for b in &out.bounds {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            b.sweep_value,
            opt(b.oracle.trace_b1),
            opt(b.oracle.trace_b2),
            b.oracle.exists_b1(),
            b.oracle.exists_b2()
        );
    }
    s
}

/// Oracle and complete reports with conditioning diagnostics.
pub fn bounds_detail_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("sweep_value,samples,{}\n", CrbReport::CSV_HEADER);
    for b in &out.bounds {
        for r in [&b.oracle, &b.complete] {
            let _ = writeln!(s, "{},{},{}", b.sweep_value, b.samples, r.csv_row());
        }
    }
    s
}

pub fn summary_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from(
        "sweep_value,estimator,trials,failed,mean_mse,se_mse,mean_re,se_re,mean_support_f1,oracle_trace_b2,predicted_re\n",
    );
    let predicted = out.predicted_re();
    for row in out.summary() {
        let idx = out
            .bounds
            .iter()
            .position(|b| b.sweep_value == row.sweep_value)
            .expect("sweep point");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.sweep_value,
            row.estimator,
            row.trials,
            row.failed,
            num(row.mean_mse),
            num(row.se_mse),
            num(row.mean_re),
            num(row.se_re),
            num(row.mean_support_f1),
            opt(out.bounds[idx].oracle.trace_b2),
            opt(predicted[idx])
        );
    }
    s
}

/// Writes `manifest.cfg`, `graph.csv`, `trials.csv`, `bounds.csv`,
/// `bounds_detail.csv` and `summary.csv` into `dir`. The manifest is a
/// complete config: feeding it back reproduces every file.
pub fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = format!(
        "# lapcrb {} resolved configuration\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    );
    fs::write(dir.join("manifest.cfg"), manifest)?;
    let mut graph = Vec::new();
    out.graph.write_csv(&mut graph)?;
    fs::write(dir.join("graph.csv"), graph)?;
    fs::write(dir.join("trials.csv"), trials_csv(out))?;
    fs::write(dir.join("bounds.csv"), bounds_csv(out))?;
    fs::write(dir.join("bounds_detail.csv"), bounds_detail_csv(out))?;
    fs::write(dir.join("summary.csv"), summary_csv(out))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dc() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.graph.nodes = 4;
        cfg.samples = 30;
        cfg.trials = 3;
        cfg.sweep = vec![200.0];
        cfg.estimators = vec![EstimatorKind::Cmle, EstimatorKind::OracleCmle];
        cfg
    }

    #[test]
    fn near_noiseless_dc_is_exact() {
        let out = run_experiment(&small_dc()).unwrap();
        assert_eq!(out.records.len(), 6);
        for r in &out.records {
            assert!(r.error.is_none());
            assert!(r.mse < 1e-12, "{r:?}");
            assert_eq!(r.support_f1, 1.0);
        }
        assert!(out.bounds[0].oracle.exists_b2());
    }

    #[test]
    fn diffusion_is_bounds_only() {
        let mut cfg = ExperimentConfig::default();
        cfg.model = ModelKind::Diffusion;
        cfg.graph.nodes = 4;
        cfg.sweep = vec![10.0, 20.0];
        cfg.estimators = vec![];
        let out = run_experiment(&cfg).unwrap();
        assert!(out.records.is_empty());
        let t: Vec<f64> = out
            .bounds
            .iter()
            .map(|b| b.oracle.trace_b2.unwrap())
            .collect();
        assert!((t[0] / t[1] - 2.0).abs() < 1e-9);
    }
}
