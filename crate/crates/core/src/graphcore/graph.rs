use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

use super::laplacian::{laplacian_from_graph, AlphaVector, LaplacianMatrix};
use super::reparam::{num_pairs, pair_index};

/// Undirected weighted edge between nodes `i > j` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph with strictly positive edge weights.
///
/// Edges are normalized to `i > j` and kept sorted by their position in the
/// `alpha` ordering, so iteration order matches support-selector columns.
/// Connectivity is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    num_nodes: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph from 0-based `(a, b, weight)` triples in any orientation.
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidDimension(
                "graph needs at least one node".into(),
            ));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for {} nodes",
                    a + 1,
                    b + 1,
                    num_nodes
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {}", a + 1)));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    a + 1,
                    b + 1,
                    w
                )));
            }
            let (i, j) = if a > b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            out.push(Edge { i, j, weight: w });
        }
        out.sort_by_key(|e| pair_index(num_nodes, e.i, e.j));
        Ok(Self {
            num_nodes,
            edges: out,
        })
    }

    /// Same as [`WeightedGraph::new`] with 1-based node labels.
    pub fn from_one_based(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut shifted = Vec::new();
        for (a, b, w) in edges {
            if a == 0 || b == 0 {
                return Err(Error::InvalidGraph("node labels are 1-based".into()));
            }
            shifted.push((a - 1, b - 1, w));
        }
        Self::new(num_nodes, shifted)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        laplacian_from_graph(self)
    }

    /// The half-vectorization of the Laplacian: `-w` at each edge position.
    pub fn alpha(&self) -> AlphaVector {
        let mut values = vec![0.0; num_pairs(self.num_nodes)];
        for e in &self.edges {
            values[pair_index(self.num_nodes, e.i, e.j)] = -e.weight;
        }
        AlphaVector::from_order(self.num_nodes, values).expect("length matches order")
    }

    /// Positions of the edges in the `alpha` ordering, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.edges
            .iter()
            .map(|e| pair_index(self.num_nodes, e.i, e.j))
            .collect()
    }

    /// Returns a copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.num_nodes,
            self.edges.iter().map(|e| (e.i, e.j, e.weight * factor)),
        )
    }

    /// Connected-component label per node, labels assigned in order of first node.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        for start in 0..self.num_nodes {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.component_labels().iter().all(|&c| c == 0)
    }

    /// Reads an edge list with header `from,to,weight` and 1-based node labels.
    ///
    /// The node count is the largest label unless `num_nodes` is given.
    pub fn read_csv(path: &Path, num_nodes: Option<usize>) -> Result<Self> {
        let file = crate::io::open_file(path)?;
        Self::from_csv_reader(file, &path.display().to_string(), num_nodes)
    }

    pub fn from_csv_reader<R: Read>(
        reader: R,
        source: &str,
        num_nodes: Option<usize>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["from", "to", "weight"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::parse(source, 1, "expected header `from,to,weight`"));
        }
        let mut raw: Vec<(usize, usize, f64, u64)> = Vec::new();
        let mut seen = std::collections::HashMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 3 {
                return Err(Error::parse(source, line, "expected 3 fields"));
            }
            let from: usize = rec[0]
                .parse()
                .map_err(|_| Error::parse(source, line, format!("bad node label `{}`", &rec[0])))?;
            let to: usize = rec[1]
                .parse()
                .map_err(|_| Error::parse(source, line, format!("bad node label `{}`", &rec[1])))?;
            let w: f64 = rec[2]
                .parse()
                .map_err(|_| Error::parse(source, line, format!("bad weight `{}`", &rec[2])))?;
            if from == 0 || to == 0 {
                return Err(Error::parse(source, line, "node labels are 1-based"));
            }
            if from == to {
                return Err(Error::parse(
                    source,
                    line,
                    format!("self-loop at node {from}"),
                ));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::parse(
                    source,
                    line,
                    format!("non-positive weight {w}"),
                ));
            }
            let key = (from.max(to), from.min(to));
            if let Some(first) = seen.insert(key, line) {
                return Err(Error::parse(
                    source,
                    line,
                    format!(
                        "duplicate edge ({}, {}), first seen on line {first}",
                        key.0, key.1
                    ),
                ));
            }
            raw.push((from, to, w, line));
        }
        let max_label = raw.iter().map(|r| r.0.max(r.1)).max().unwrap_or(0);
        let m = match num_nodes {
            Some(m) if m < max_label => {
                return Err(Error::parse(
                    source,
                    0,
                    format!("node label {max_label} exceeds declared node count {m}"),
                ))
            }
            Some(m) => m,
            None => max_label,
        };
        if m == 0 {
            return Err(Error::parse(
                source,
                0,
                "edge list is empty and no node count given",
            ));
        }
        Self::from_one_based(m, raw.into_iter().map(|(a, b, w, _)| (a, b, w)))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "from,to,weight")?;
        for e in &self.edges {
            writeln!(out, "{},{},{}", e.i + 1, e.j + 1, e.weight)?;
        }
        Ok(())
    }
}
