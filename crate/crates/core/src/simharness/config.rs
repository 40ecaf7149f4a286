use std::fmt::{self, Display};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::estimators::SolverConfig;
use crate::{Error, Result};

use super::graphs::{GraphKind, GraphSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dc,
    Lgmrf,
    Diffusion,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc" => Ok(ModelKind::Dc),
            "lgmrf" => Ok(ModelKind::Lgmrf),
            "diffusion" => Ok(ModelKind::Diffusion),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

impl Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Dc => "dc",
            ModelKind::Lgmrf => "lgmrf",
            ModelKind::Diffusion => "diffusion",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EstimatorKind {
    Cmle,
    CmleAdmm,
    OracleCmle,
    Pgd,
    OraclePgd,
}

impl EstimatorKind {
    pub fn model(&self) -> ModelKind {
        match self {
            EstimatorKind::Cmle | EstimatorKind::CmleAdmm | EstimatorKind::OracleCmle => {
                ModelKind::Dc
            }
            EstimatorKind::Pgd | EstimatorKind::OraclePgd => ModelKind::Lgmrf,
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, EstimatorKind::OracleCmle | EstimatorKind::OraclePgd)
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cmle" => EstimatorKind::Cmle,
            "cmle_admm" => EstimatorKind::CmleAdmm,
            "oracle_cmle" => EstimatorKind::OracleCmle,
            "pgd" => EstimatorKind::Pgd,
            "oracle_pgd" => EstimatorKind::OraclePgd,
            other => return Err(Error::Config(format!("unknown estimator '{other}'"))),
        })
    }
}

impl Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Cmle => "cmle",
            EstimatorKind::CmleAdmm => "cmle_admm",
            EstimatorKind::OracleCmle => "oracle_cmle",
            EstimatorKind::Pgd => "pgd",
            EstimatorKind::OraclePgd => "oracle_pgd",
        })
    }
}

/// A Monte Carlo experiment. The sweep variable is the SNR in dB for `dc`
/// and the samples-per-node ratio `n/p` for `lgmrf` and `diffusion`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub graph: GraphSpec,
    pub graph_seed: u64,
    pub sweep: Vec<f64>,
    /// Number of samples `N` for `dc`.
    pub samples: usize,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub solver: SolverConfig,
    pub filter_taps: Vec<f64>,
    pub seed: u64,
    pub output: PathBuf,
}

pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "graph",
    "graph_file",
    "nodes",
    "weight_low",
    "weight_high",
    "edge_prob",
    "graph_seed",
    "sweep",
    "samples",
    "trials",
    "estimators",
    "filter_taps",
    "reg_lambda",
    "admm_rho",
    "max_iters",
    "tol",
    "step_init",
    "backtrack_beta",
    "seed",
    "output",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Dc,
            graph: GraphSpec::new(GraphKind::Chain, 6),
            graph_seed: 1,
            sweep: vec![30.0, 40.0, 50.0],
            samples: 600,
            trials: 200,
            estimators: vec![EstimatorKind::OracleCmle],
            solver: SolverConfig::default(),
            filter_taps: vec![1.0, 0.5],
            seed: 1,
            output: PathBuf::from("out"),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn parse_list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn join<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "model" => self.model = value.parse()?,
            "graph" => self.graph.kind = value.parse()?,
            "graph_file" => self.graph.path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "nodes" => self.graph.nodes = num(key, value)?,
            "weight_low" => self.graph.weight_low = num(key, value)?,
            "weight_high" => self.graph.weight_high = num(key, value)?,
            "edge_prob" => self.graph.edge_prob = num(key, value)?,
            "graph_seed" => self.graph_seed = num(key, value)?,
            "sweep" => self.sweep = list(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "estimators" => self.estimators = parse_list(value)?,
            "filter_taps" => self.filter_taps = list(key, value)?,
            "reg_lambda" => self.solver.reg_lambda = num(key, value)?,
            "admm_rho" => self.solver.admm_rho = num(key, value)?,
            "max_iters" => self.solver.max_iters = num(key, value)?,
            "tol" => self.solver.tol = num(key, value)?,
            "step_init" => self.solver.step_init = num(key, value)?,
            "backtrack_beta" => self.solver.backtrack_beta = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "output" => self.output = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Defaults overridden by `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    source,
                    n as u64 + 1,
                    format!("expected key = value, got '{line}'"),
                )
            })?;
            cfg.set(key.trim(), value).map_err(|e| match e {
                Error::Config(msg) => Error::parse(source, n as u64 + 1, msg),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut text = String::new();
        crate::io::open_file(path)?.read_to_string(&mut text)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// All problems at once, before any computation.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if let Err(e) = self.graph.validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = self.solver.validate() {
            errs.push(e.to_string());
        }
        if self.trials == 0 {
            errs.push("trials must be at least 1".into());
        }
        if self.sweep.is_empty() {
            errs.push("sweep is empty".into());
        }
        if self.sweep.iter().any(|v| !v.is_finite()) {
            errs.push("sweep values must be finite".into());
        }
        if self.model != ModelKind::Dc && self.sweep.iter().any(|v| *v <= 0.0) {
            errs.push("n/p sweep values must be positive".into());
        }
        if self.model == ModelKind::Dc && self.samples == 0 {
            errs.push("samples must be at least 1".into());
        }
        if self.model == ModelKind::Diffusion && self.filter_taps.is_empty() {
            errs.push("filter_taps is empty".into());
        }
        for e in &self.estimators {
            if e.model() != self.model {
                errs.push(format!(
                    "estimator {e} does not apply to model {}",
                    self.model
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    /// Number of samples at one sweep point.
    pub fn samples_at(&self, sweep_value: f64, nodes: usize) -> usize {
        match self.model {
            ModelKind::Dc => self.samples,
            _ => ((sweep_value * nodes as f64).round() as usize).max(1),
        }
    }

    /// Fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let s = &self.solver;
        let g = &self.graph;
        let path = g
            .path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let pairs: Vec<(&str, String)> = vec![
            ("model", self.model.to_string()),
            ("graph", g.kind.as_str().to_string()),
            ("graph_file", path),
            ("nodes", g.nodes.to_string()),
            ("weight_low", g.weight_low.to_string()),
            ("weight_high", g.weight_high.to_string()),
            ("edge_prob", g.edge_prob.to_string()),
            ("graph_seed", self.graph_seed.to_string()),
            ("sweep", join(&self.sweep)),
            ("samples", self.samples.to_string()),
            ("trials", self.trials.to_string()),
            ("estimators", join(&self.estimators)),
            ("filter_taps", join(&self.filter_taps)),
            ("reg_lambda", s.reg_lambda.to_string()),
            ("admm_rho", s.admm_rho.to_string()),
            ("max_iters", s.max_iters.to_string()),
            ("tol", s.tol.to_string()),
            ("step_init", s.step_init.to_string()),
            ("backtrack_beta", s.backtrack_beta.to_string()),
            ("seed", self.seed.to_string()),
            ("output", self.output.display().to_string()),
        ];
        debug_assert_eq!(pairs.len(), CONFIG_KEYS.len());
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "model = lgmrf\ngraph = grid_planar # planar\nnodes = 20\nsweep = 5, 15\nestimators = pgd,oracle_pgd\ntol = 1e-9\n";
        let cfg = ExperimentConfig::parse(text, "t").unwrap();
        assert_eq!(cfg.model, ModelKind::Lgmrf);
        assert_eq!(cfg.sweep, vec![5.0, 15.0]);
        assert_eq!(cfg.solver.tol, 1e-9);
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text(), "t").unwrap(), cfg);
    }

    #[test]
    fn unknown_key_has_line_number() {
        let err = ExperimentConfig::parse("trials = 3\nbogus = 1\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("cfg:2"), "{err}");
    }

    #[test]
    fn all_problems_reported() {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 0;
        cfg.estimators = vec![EstimatorKind::Pgd];
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("trials") && msg.contains("pgd"));
    }
}
