//! Overlapping dense-subgraph detection by ego-net splitting.
//!
//! Each node is replicated into personas, one per connected component of its
//! ego-net minus the ego. A global modularity clustering of the persona graph
//! is then mapped back onto original nodes, so a node can belong to several
//! clusters.

mod ego;
mod louvain;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use ego::{ego_split, ego_split_with, ConnectedComponents, LocalClusterer, PersonaGraph};
pub use louvain::{louvain, modularity};

use crate::dataset::Provenance;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Global clustering stage run on the persona graph.
pub trait GlobalClusterer {
    fn partition(&self, num_nodes: usize, edges: &[(usize, usize)]) -> Vec<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Louvain {
    pub resolution: f64,
    pub seed: u64,
}

impl GlobalClusterer for Louvain {
    fn partition(&self, num_nodes: usize, edges: &[(usize, usize)]) -> Vec<usize> {
        louvain(num_nodes, edges, self.resolution, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub resolution: f64,
    pub min_cluster_size: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            min_cluster_size: 2,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cluster.resolution",
                reason: format!("must be positive, got {}", self.resolution),
            });
        }
        if self.min_cluster_size < 2 {
            return Err(Error::InvalidParameter {
                name: "cluster.min_cluster_size",
                reason: format!("must be at least 2, got {}", self.min_cluster_size),
            });
        }
        Ok(())
    }
}

/// Overlapping clusters over original node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    clusters: Vec<Vec<usize>>,
    memberships: Vec<Vec<usize>>,
    resolution: f64,
}

impl ClusterSet {
    /// Wraps explicit member lists. Members are sorted and deduplicated; empty
    /// clusters and ids outside `0..num_nodes` are rejected.
    pub fn new(num_nodes: usize, clusters: Vec<Vec<usize>>, resolution: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(clusters.len());
        for (i, mut c) in clusters.into_iter().enumerate() {
            c.sort_unstable();
            c.dedup();
            if c.is_empty() {
                return Err(Error::EmptyCluster);
            }
            if let Some(&bad) = c.iter().find(|&&v| v >= num_nodes) {
                return Err(Error::InvalidGraph(format!(
                    "cluster {i} references node {bad} ({num_nodes} nodes)"
                )));
            }
            out.push(c);
        }
        let mut memberships = vec![Vec::new(); num_nodes];
        for (ci, c) in out.iter().enumerate() {
            for &v in c {
                memberships[v].push(ci);
            }
        }
        Ok(Self {
            clusters: out,
            memberships,
            resolution,
        })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            clusters: Vec::new(),
            memberships: vec![Vec::new(); num_nodes],
            resolution: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster(&self, i: usize) -> &[usize] {
        &self.clusters[i]
    }

    /// Clusters containing node `v`.
    pub fn memberships(&self, v: usize) -> &[usize] {
        &self.memberships[v]
    }

    pub fn num_nodes(&self) -> usize {
        self.memberships.len()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }
}

/// Ego-splitting followed by Louvain on the persona graph.
pub fn overlapping_clusters(g: &Graph, config: &ClusterConfig, seed: u64) -> Result<ClusterSet> {
    config.validate()?;
    let global = Louvain {
        resolution: config.resolution,
        seed,
    };
    overlapping_clusters_with(
        g,
        &ConnectedComponents,
        &global,
        config.min_cluster_size,
        config.resolution,
    )
}

pub fn overlapping_clusters_with(
    g: &Graph,
    local: &dyn LocalClusterer,
    global: &dyn GlobalClusterer,
    min_cluster_size: usize,
    resolution: f64,
) -> Result<ClusterSet> {
    let personas = ego_split_with(g, local);
    let partition = global.partition(personas.num_personas(), &personas.edges);
    let k = partition.iter().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (p, &c) in partition.iter().enumerate() {
        groups[c].push(personas.persona_node[p]);
    }
    let mut seen = HashSet::new();
    let mut clusters = Vec::new();
    for mut members in groups {
        members.sort_unstable();
        members.dedup();
        if members.len() < min_cluster_size {
            continue;
        }
        if seen.insert(members.clone()) {
            clusters.push(members);
        }
    }
    ClusterSet::new(g.num_nodes(), clusters, resolution)
}

/// `clusters.json` contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterDump {
    pub resolution: f64,
    pub seed: u64,
    pub min_cluster_size: usize,
    pub num_nodes: usize,
    pub clusters: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ClusterDump {
    pub fn new(set: &ClusterSet, seed: u64, min_cluster_size: usize) -> Self {
        Self {
            resolution: set.resolution(),
            seed,
            min_cluster_size,
            num_nodes: set.num_nodes(),
            clusters: set.clusters().to_vec(),
            provenance: None,
        }
    }

    pub fn into_set(self) -> Result<ClusterSet> {
        ClusterSet::new(self.num_nodes, self.clusters, self.resolution)
    }
}
