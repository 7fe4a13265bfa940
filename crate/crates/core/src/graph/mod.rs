//! Graph and dataset model, homophily metrics and neighborhood queries.

mod io;
mod synth;

pub use io::{load_dataset, load_splits, write_dataset, write_features, write_graph, write_labels};
pub use synth::{synthesize, SyntheticConfig};

use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Undirected simple graph in compressed adjacency form.
///
/// Every edge `{u, v}` is stored twice, once in each endpoint's neighbor
/// list. Neighbor lists are sorted ascending and carry no duplicates or
/// self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    neighbor_ids: Vec<usize>,
    num_edges: usize,
}

impl Graph {
    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            num_nodes,
            row_offsets: vec![0; num_nodes + 1],
            neighbor_ids: Vec::new(),
            num_edges: 0,
        }
    }

    /// Builds a graph from an arbitrary edge list. Reverse edges are added,
    /// duplicates merged and self-loops dropped.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            for index in [u, v] {
                if index >= num_nodes {
                    return Err(Error::IndexOutOfRange { index, num_nodes });
                }
            }
            if u != v {
                pairs.push((u, v));
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &pairs {
            row_offsets[u + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let neighbor_ids: Vec<usize> = pairs.iter().map(|&(_, v)| v).collect();
        let num_edges = neighbor_ids.len() / 2;
        Ok(Graph {
            num_nodes,
            row_offsets,
            neighbor_ids,
            num_edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn neighbor_ids(&self) -> &[usize] {
        &self.neighbor_ids
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbor_ids[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|i| self.degree(i)).collect()
    }

    pub fn contains_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && v < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.num_nodes {
            return Err(Error::shape(format!(
                "permutation has length {} for {} nodes",
                perm.len(),
                self.num_nodes
            )));
        }
        Graph::from_edges(self.num_nodes, self.edges().map(|(u, v)| (perm[u], perm[v])))
    }

    /// Checks the structural invariants: offsets, ordering, symmetry, no
    /// self-loops, no duplicates.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        if self.row_offsets.len() != n + 1 || self.row_offsets[0] != 0 {
            return Err(Error::invalid("row offsets malformed"));
        }
        if self.row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("row offsets decrease"));
        }
        if self.row_offsets[n] != self.neighbor_ids.len()
            || self.neighbor_ids.len() != 2 * self.num_edges
        {
            return Err(Error::invalid("edge count does not match storage"));
        }
        for u in 0..n {
            let nbrs = self.neighbors(u);
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("neighbors of {u} unsorted or duplicated")));
            }
            for &v in nbrs {
                if v >= n {
                    return Err(Error::IndexOutOfRange { index: v, num_nodes: n });
                }
                if v == u {
                    return Err(Error::invalid(format!("self-loop at {u}")));
                }
                if !self.contains_edge(v, u) {
                    return Err(Error::invalid(format!("edge ({u}, {v}) has no reverse")));
                }
            }
        }
        Ok(())
    }
}

/// Named node partition. Nodes may belong to none of the three parts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for &i in self.train.iter().chain(&self.valid).chain(&self.test) {
            if i >= num_nodes {
                return Err(Error::IndexOutOfRange { index: i, num_nodes });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("node {i} appears in more than one split")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    /// Row `i` is the feature vector of node `i`.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub splits: Option<Splits>,
}

impl Dataset {
    /// Validates shapes; the class count is `max(label) + 1`.
    pub fn new(graph: Graph, features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self::with_classes(graph, features, labels, num_classes)
    }

    pub fn with_classes(
        graph: Graph,
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.nrows() != n {
            return Err(Error::shape(format!(
                "features have {} rows for {n} nodes",
                features.nrows()
            )));
        }
        if labels.len() != n {
            return Err(Error::shape(format!("{} labels for {n} nodes", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::invalid(format!("label {bad} >= class count {num_classes}")));
        }
        Ok(Dataset {
            graph,
            features,
            labels,
            num_classes,
            splits: None,
        })
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        splits.validate(self.graph.num_nodes())?;
        self.splits = Some(splits);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Row-wise L2 normalization; all-zero rows stay zero.
pub fn normalize_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Fraction of undirected edges whose endpoints share a label.
pub fn edge_homophily(graph: &Graph, labels: &[usize]) -> Result<f64> {
    check_labels(graph, labels)?;
    if graph.num_edges() == 0 {
        return Err(Error::UndefinedMetric("edge homophily of a graph without edges".into()));
    }
    let same = graph.edges().filter(|&(u, v)| labels[u] == labels[v]).count();
    Ok(same as f64 / graph.num_edges() as f64)
}

/// Mean over non-isolated nodes of the same-label share of their neighbors.
pub fn node_homophily(graph: &Graph, labels: &[usize]) -> Result<f64> {
    check_labels(graph, labels)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for u in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(u);
        if nbrs.is_empty() {
            continue;
        }
        let same = nbrs.iter().filter(|&&v| labels[v] == labels[u]).count();
        total += same as f64 / nbrs.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::UndefinedMetric("node homophily with every node isolated".into()));
    }
    Ok(total / counted as f64)
}

fn check_labels(graph: &Graph, labels: &[usize]) -> Result<()> {
    if labels.len() != graph.num_nodes() {
        return Err(Error::shape(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.num_nodes()
        )));
    }
    Ok(())
}

/// All nodes within `hops` hops of any seed, seeds included, sorted ascending.
pub fn khop_pool(graph: &Graph, seeds: &[usize], hops: usize) -> Result<Vec<usize>> {
    if hops == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("seed set is empty"));
    }
    let n = graph.num_nodes();
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if s >= n {
            return Err(Error::IndexOutOfRange { index: s, num_nodes: n });
        }
        if depth[s] == usize::MAX {
            depth[s] = 0;
            queue.push_back(s);
        }
    }
    let mut pool = Vec::new();
    while let Some(u) = queue.pop_front() {
        pool.push(u);
        if depth[u] == hops {
            continue;
        }
        for &v in graph.neighbors(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    pool.sort_unstable();
    Ok(pool)
}
