//! Attributed, undirected, unweighted graphs and train/val/test splits.
//!
//! A [`Graph`] is immutable once built. Adjacency is kept in CSR form with
//! sorted neighbour lists; every structural operation returns a new graph.

use std::collections::HashSet;

use ndarray::ArrayView2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
    features: CsrMatrix,
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl Graph {
    /// Builds a graph from an edge list, feature rows and optional labels.
    ///
    /// The node count is the number of feature rows. Reversed and repeated
    /// edges collapse to a single undirected edge. Self-loops are an error
    /// when `strict` is set and are dropped otherwise.
    pub fn build(
        edges: &[(usize, usize)],
        features: CsrMatrix,
        labels: Option<Vec<Option<usize>>>,
        num_classes: usize,
        strict: bool,
    ) -> Result<Graph> {
        let n = features.nrows();
        let labels = labels.unwrap_or_else(|| vec![None; n]);
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: labels.len(),
                context: "label count vs feature rows".into(),
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if let Some(c) = *label {
                if c >= num_classes {
                    return Err(Error::InvalidGraph(format!(
                        "node {i}: label {c} out of range ({num_classes} classes)"
                    )));
                }
            }
        }
        for r in 0..n {
            for (c, v) in features.row_iter(r) {
                if v < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "node {r}: negative feature value {v} at index {c}"
                    )));
                }
            }
        }
        let mut canon = Vec::with_capacity(edges.len());
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge #{k} ({u}, {v}): endpoint out of range ({n} nodes)"
                )));
            }
            if u == v {
                if strict {
                    return Err(Error::InvalidGraph(format!("edge #{k} ({u}, {v}): self-loop")));
                }
                continue;
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self::from_canonical(&canon, features, labels, num_classes))
    }

    /// `canon` must be sorted, deduplicated, with `u < v` and valid endpoints.
    fn from_canonical(
        canon: &[(usize, usize)],
        features: CsrMatrix,
        labels: Vec<Option<usize>>,
        num_classes: usize,
    ) -> Graph {
        let n = features.nrows();
        let mut degree = vec![0usize; n];
        for &(u, v) in canon {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut adjacency = vec![0usize; offsets[n]];
        for &(u, v) in canon {
            adjacency[cursor[u]] = v;
            cursor[u] += 1;
            adjacency[cursor[v]] = u;
            cursor[v] += 1;
        }
        for u in 0..n {
            adjacency[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Graph {
            offsets,
            adjacency,
            features,
            labels,
            num_classes,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.len() / 2
    }

    pub fn feat_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &CsrMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    /// Sorted, duplicate-free neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Same graph with a different edge set. Edges must be valid for this node count.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Graph> {
        Graph::build(
            edges,
            self.features.clone(),
            Some(self.labels.clone()),
            self.num_classes,
            true,
        )
    }

    /// Same structure with labels replaced.
    pub fn with_labels(&self, labels: Vec<Option<usize>>) -> Result<Graph> {
        let edges: Vec<_> = self.edges().collect();
        Graph::build(&edges, self.features.clone(), Some(labels), self.num_classes, true)
    }

    /// Removes `⌊fraction·|E|⌋` undirected edges chosen uniformly without replacement.
    pub fn drop_edges(&self, fraction: f64, seed: u64) -> Result<Graph> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParameter {
                name: "fraction",
                reason: format!("{fraction} is outside [0, 1]"),
            });
        }
        let edges: Vec<_> = self.edges().collect();
        let m = edges.len();
        let k = ((fraction * m as f64).floor() as usize).min(m);
        let mut rng = seed::rng(seed);
        let mut removed = vec![false; m];
        for i in sample(&mut rng, m, k) {
            removed[i] = true;
        }
        let kept: Vec<_> = edges
            .into_iter()
            .zip(removed)
            .filter_map(|(e, r)| (!r).then_some(e))
            .collect();
        Ok(Self::from_canonical(
            &kept,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
        ))
    }

    /// Appends `new_features.nrows()` nodes with ids `n..n+m` and the given edges.
    ///
    /// Every new edge must touch at least one appended node; edges among the
    /// original nodes are rejected so the original block stays untouched.
    pub fn merge(
        &self,
        new_features: ArrayView2<'_, f64>,
        new_edges: &[(usize, usize)],
        new_labels: Option<&[Option<usize>]>,
    ) -> Result<Graph> {
        let n = self.num_nodes();
        let m = new_features.nrows();
        if m > 0 && new_features.ncols() != self.feat_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feat_dim(),
                actual: new_features.ncols(),
                context: "appended feature rows".into(),
            });
        }
        if let Some(l) = new_labels {
            if l.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: l.len(),
                    context: "appended labels".into(),
                });
            }
        }
        let total = n + m;
        let mut edges: Vec<_> = self.edges().collect();
        for (k, &(u, v)) in new_edges.iter().enumerate() {
            if u >= total || v >= total {
                return Err(Error::InvalidGraph(format!(
                    "new edge #{k} ({u}, {v}): endpoint out of range ({total} nodes)"
                )));
            }
            if u < n && v < n {
                return Err(Error::InvalidGraph(format!(
                    "new edge #{k} ({u}, {v}) joins two existing nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("new edge #{k} ({u}, {v}): self-loop")));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();
        let features = self
            .features
            .vstack(&CsrMatrix::from_dense(new_features).with_ncols(self.feat_dim()))?;
        let mut labels = self.labels.clone();
        match new_labels {
            Some(l) => {
                for (i, c) in l.iter().enumerate() {
                    if let Some(c) = *c {
                        if c >= self.num_classes {
                            return Err(Error::InvalidGraph(format!(
                                "new node {}: label {c} out of range",
                                n + i
                            )));
                        }
                    }
                }
                labels.extend_from_slice(l)
            }
            None => labels.extend(std::iter::repeat_n(None, m)),
        }
        Ok(Self::from_canonical(&edges, features, labels, self.num_classes))
    }
}

impl CsrMatrix {
    fn with_ncols(self, ncols: usize) -> CsrMatrix {
        if self.nrows() == 0 {
            CsrMatrix::zeros(0, ncols)
        } else {
            self
        }
    }
}

/// Disjoint train/validation/test node lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Every invariant violation as a message; empty when valid.
    pub fn violations(&self, num_nodes: usize, labels: &[Option<usize>]) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen: HashSet<usize> = HashSet::new();
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            let mut local = HashSet::new();
            for &id in ids {
                if id >= num_nodes {
                    out.push(format!("{name}: node {id} out of range ({num_nodes} nodes)"));
                    continue;
                }
                if !local.insert(id) {
                    out.push(format!("{name}: node {id} listed twice"));
                    continue;
                }
                if !seen.insert(id) {
                    out.push(format!("{name}: node {id} also appears in another split"));
                }
                if name == "train" && labels.get(id).copied().flatten().is_none() {
                    out.push(format!("train: node {id} has no label"));
                }
            }
        }
        out
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        match self.violations(g.num_nodes(), g.labels()).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidSplits(v)),
        }
    }
}
