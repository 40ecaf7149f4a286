//! The `lapcrb` command line.
//!
//! Exit codes: 0 success (including singular-FIM findings), 1 usage or
//! configuration error, 2 data error, 3 failed self-check.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::fim::{crb_complete, oracle_crb, CrbReport, FisherInfo};
use crate::graphcore::{build_reparam_operators, SupportSelector, WeightedGraph};
use crate::models::{
    dc_full_fim, dc_total_fim, diffusion_fim, lgmrf_fim, lgmrf_full_fim, DcScenario,
    DiffusionScenario, LgmrfScenario, Partition,
};
use crate::simharness::{
    dc_scenario, generate_graph, run_experiment, summary_csv, write_outputs, ExperimentConfig,
    GraphKind, GraphSpec,
};
use crate::validate::run_checks;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "lapcrb",
    version,
    about = "Cramer-Rao bounds and estimators for graph Laplacians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Complete and oracle bounds for one graph and model.
    Bounds(BoundsArgs),
    /// Monte Carlo experiment from a config file.
    Simulate(SimulateArgs),
    /// Write a generated graph as `from,to,weight` CSV.
    GenGraph(GenGraphArgs),
    /// Run the built-in invariant checks.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Dc,
    Lgmrf,
    Diffusion,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Edge list with 1-based `from,to,weight` rows.
    #[arg(long)]
    graph: PathBuf,
    /// Node count, when the edge list leaves trailing nodes isolated.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_enum)]
    model: Model,
    /// Number of samples N.
    #[arg(long, default_value_t = 10)]
    samples: usize,
    /// DC: SNR in dB for generated excitations.
    #[arg(long, default_value_t = 30.0)]
    snr: f64,
    /// DC: excitation matrix, one column per sample.
    #[arg(long, requires = "noise")]
    theta: Option<PathBuf>,
    /// DC: noise covariance matrix.
    #[arg(long, requires = "theta")]
    noise: Option<PathBuf>,
    /// DC: observation mask, one 0/1 column per sample.
    #[arg(long, requires = "theta")]
    mask: Option<PathBuf>,
    /// Diffusion: filter taps h_0,h_1,...
    #[arg(long, value_delimiter = ',', default_value = "1,0.5")]
    taps: Vec<f64>,
    /// LGMRF: `node,component` file for disconnected graphs.
    #[arg(long)]
    components: Option<PathBuf>,
    /// Oracle bounds over every alpha entry instead of the graph's edges.
    #[arg(long)]
    complete_support: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for `bounds.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Single-point SNR sweep (dB).
    #[arg(long)]
    snr: Option<f64>,
}

#[derive(Args, Debug)]
struct GenGraphArgs {
    #[arg(long, default_value = "chain")]
    kind: String,
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 0.5)]
    weight_low: f64,
    #[arg(long, default_value_t = 2.0)]
    weight_high: f64,
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Structural checks only.
    #[arg(long)]
    quick: bool,
    /// Replacement for the embedded M=4 P-matrix golden file.
    #[arg(long)]
    golden: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let res = match cli.command {
        Command::Bounds(a) => cmd_bounds(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::GenGraph(a) => cmd_gen_graph(&a, out),
        Command::Validate(a) => return cmd_validate(&a, out, err),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn report_rows(oracle: &CrbReport, complete: &CrbReport) -> String {
    let mut s = format!("bound,{},rcond_full\n", CrbReport::CSV_HEADER);
    for (name, r) in [("oracle", oracle), ("complete", complete)] {
        let full = r
            .rcond_full
            .map(|x| format!("{x:.12e}"))
            .unwrap_or_default();
        s.push_str(&format!("{name},{},{full}\n", r.csv_row()));
    }
    s
}

fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let g = WeightedGraph::read_csv(&a.graph, a.nodes)?;
    let m = g.num_nodes();
    let ops = build_reparam_operators(m)?;
    let l = g.laplacian();
    let (j, jl): (FisherInfo, Option<FisherInfo>) = match a.model {
        Model::Dc => {
            let sc = match (&a.theta, &a.noise) {
                (Some(t), Some(n)) => DcScenario::from_files(t, n, a.mask.as_deref())?,
                _ => dc_scenario(&g, a.snr, a.samples, a.seed)?,
            };
            (dc_total_fim(&sc, &ops)?, Some(dc_full_fim(&sc)?))
        }
        Model::Lgmrf => {
            let comps = a
                .components
                .as_deref()
                .map(Partition::read_csv)
                .transpose()?;
            let sc = LgmrfScenario::new(a.samples, comps)?;
            (lgmrf_fim(&l, &sc, &ops)?, Some(lgmrf_full_fim(&l, &sc)?))
        }
        Model::Diffusion => {
            let sc = DiffusionScenario::stationary(a.taps.clone(), m)?;
            (diffusion_fim(&l, &sc, &ops)?.scaled(a.samples as f64), None)
        }
    };
    let support = if a.complete_support {
        SupportSelector::full(ops.num_params())?
    } else {
        SupportSelector::from_indices(ops.num_params(), g.support())?
    };
    let oracle = oracle_crb(&j, &support)?;
    let complete = crb_complete(&j, jl.as_ref(), &ops)?;
    let text = report_rows(&oracle, &complete);
    out.write_all(text.as_bytes())?;
    for (name, r) in [("oracle", &oracle), ("complete", &complete)] {
        for reason in [&r.b1_failure, &r.b2_failure].into_iter().flatten() {
            writeln!(out, "# {name}: {reason}")?;
        }
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("bounds.csv"), text)?;
    }
    Ok(())
}

fn resolve_config(a: &SimulateArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{o}'")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(snr) = a.snr {
        cfg.sweep = vec![snr];
    }
    if let Some(o) = &a.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(a)?;
    let result = run_experiment(&cfg)?;
    write_outputs(&cfg, &result, &cfg.output)?;
    let failed = result.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        writeln!(
            err,
            "warning: {failed} estimator runs failed; see trials.csv"
        )?;
    }
    out.write_all(summary_csv(&result).as_bytes())?;
    Ok(())
}

fn cmd_gen_graph(a: &GenGraphArgs, out: &mut dyn Write) -> Result<()> {
    let kind: GraphKind = a.kind.parse()?;
    if kind == GraphKind::FromFile {
        return Err(Error::Config("gen-graph cannot use from_file".into()));
    }
    let spec = GraphSpec {
        weight_low: a.weight_low,
        weight_high: a.weight_high,
        edge_prob: a.edge_prob,
        ..GraphSpec::new(kind, a.nodes)
    };
    let g = generate_graph(&spec, a.seed)?;
    match &a.out {
        Some(p) => write_graph_file(&g, p),
        None => g.write_csv(out),
    }
}

fn write_graph_file(g: &WeightedGraph, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    g.write_csv(std::io::BufWriter::new(f))
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let results = run_checks(a.quick, a.golden.as_deref());
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{tag}  {:width$}  {}", r.name, r.detail);
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        let _ = writeln!(err, "failed: {}", failed.join(", "));
        EXIT_INVARIANT
    }
}
