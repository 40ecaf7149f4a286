use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graphcore::WeightedGraph;
use crate::{Error, Result};

const ER_MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Chain,
    Star,
    GridPlanar,
    ErdosRenyi,
    FromFile,
}

impl GraphKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GraphKind::Chain => "chain",
            GraphKind::Star => "star",
            GraphKind::GridPlanar => "grid_planar",
            GraphKind::ErdosRenyi => "erdos_renyi",
            GraphKind::FromFile => "from_file",
        }
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "chain" => GraphKind::Chain,
            "star" => GraphKind::Star,
            "grid_planar" => GraphKind::GridPlanar,
            "erdos_renyi" => GraphKind::ErdosRenyi,
            "from_file" => GraphKind::FromFile,
            other => return Err(Error::Config(format!("unknown graph kind '{other}'"))),
        })
    }
}

/// Recipe for a random weighted graph. Weights are i.i.d. uniform on
/// `[weight_low, weight_high]`; equal bounds give constant weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub nodes: usize,
    pub weight_low: f64,
    pub weight_high: f64,
    /// ER edge probability, or chord probability for `grid_planar`.
    pub edge_prob: f64,
    pub path: Option<PathBuf>,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, nodes: usize) -> Self {
        Self {
            kind,
            nodes,
            weight_low: 0.5,
            weight_high: 2.0,
            edge_prob: 0.3,
            path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == GraphKind::FromFile {
            if self.path.is_none() {
                return Err(Error::Config("from_file graph needs graph_file".into()));
            }
            return Ok(());
        }
        if self.nodes < 2 {
            return Err(Error::InvalidDimension(format!(
                "graph needs at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.weight_low > 0.0
            && self.weight_low <= self.weight_high
            && self.weight_high.is_finite())
        {
            return Err(Error::Config(format!(
                "weight range [{}, {}] must satisfy 0 < low <= high < inf",
                self.weight_low, self.weight_high
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::Config(format!(
                "edge_prob {} outside [0, 1]",
                self.edge_prob
            )));
        }
        if self.kind == GraphKind::ErdosRenyi && self.edge_prob == 0.0 {
            return Err(Error::InfeasibleSpec(
                "erdos_renyi with edge_prob 0 cannot be connected".into(),
            ));
        }
        Ok(())
    }

    fn weight(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.weight_low == self.weight_high {
            self.weight_low
        } else {
            rng.random_range(self.weight_low..=self.weight_high)
        }
    }
}

/// Deterministic for a fixed seed. Every generated kind is connected.
pub fn generate_graph(spec: &GraphSpec, seed: u64) -> Result<WeightedGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = spec.nodes;
    let edges: Vec<(usize, usize)> = match spec.kind {
        GraphKind::FromFile => {
            let path = spec.path.as_ref().expect("validated");
            return WeightedGraph::read_csv(path, None);
        }
        GraphKind::Chain => (0..m - 1).map(|i| (i + 1, i)).collect(),
        GraphKind::Star => (1..m).map(|i| (i, 0)).collect(),
        GraphKind::GridPlanar => grid_planar(m, spec.edge_prob, &mut rng),
        GraphKind::ErdosRenyi => erdos_renyi(m, spec.edge_prob, &mut rng)?,
    };
    let weighted: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|(i, j)| (i, j, spec.weight(&mut rng)))
        .collect();
    WeightedGraph::new(m, weighted)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Nodes on a near-square grid, row-major. A random spanning tree of the grid
/// lattice is kept, every other lattice edge is added with probability `p`,
/// and each unit cell gets at most one diagonal with probability `p`.
fn grid_planar(m: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let cols = (m as f64).sqrt().ceil() as usize;
    let at = |r: usize, c: usize| {
        let k = r * cols + c;
        (c < cols && k < m).then_some(k)
    };
    let rows = m.div_ceil(cols);
    let mut lattice = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let Some(k) = at(r, c) else { continue };
            if let Some(right) = at(r, c + 1) {
                lattice.push((right, k));
            }
            if let Some(down) = at(r + 1, c) {
                lattice.push((down, k));
            }
        }
    }
    lattice.shuffle(rng);
    let mut parent: Vec<usize> = (0..m).collect();
    let mut edges = Vec::new();
    let mut rest = Vec::new();
    for (a, b) in lattice {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            edges.push((a, b));
        } else {
            rest.push((a, b));
        }
    }
    for e in rest {
        if rng.random_bool(p) {
            edges.push(e);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let corners = (at(r, c), at(r, c + 1), at(r + 1, c), at(r + 1, c + 1));
            if let (Some(tl), Some(tr), Some(bl), Some(br)) = corners {
                if rng.random_bool(p) {
                    if rng.random_bool(0.5) {
                        edges.push((br, tl));
                    } else {
                        edges.push((bl, tr));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// `G(m, p)` redrawn until connected.
fn erdos_renyi(m: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    for _ in 0..ER_MAX_DRAWS {
        let mut edges = Vec::new();
        let mut parent: Vec<usize> = (0..m).collect();
        let mut parts = m;
        for j in 0..m {
            for i in j + 1..m {
                if rng.random_bool(p) {
                    edges.push((i, j));
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                        parts -= 1;
                    }
                }
            }
        }
        if parts == 1 {
            return Ok(edges);
        }
    }
    Err(Error::InfeasibleSpec(format!(
        "no connected G({m}, {p}) in {ER_MAX_DRAWS} draws"
    )))
}
