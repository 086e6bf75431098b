//! Elector-node graph augmentation for semi-supervised node classification.
//!
//! The pipeline finds overlapping dense subgraphs ([`cluster`]), synthesises one
//! elector node per subgraph ([`augment`]), labels electors by majority vote and
//! by confidence-gated self-training with gradient-boosted trees ([`boost`]),
//! and merges them back into the graph. [`gnn`] trains a two-layer GCN on the
//! original or augmented graph and [`analysis`] measures why the augmentation helps.

pub mod analysis;
pub mod augment;
pub mod boost;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod seed;
pub mod sparse;
pub mod synthetic;

pub use augment::{elco_augment, AugmentConfig, AugmentedGraph, Elector, ElectorLabel};
pub use boost::{gbdt_fit, GbdtModel, GbdtParams};
pub use cluster::{overlapping_clusters, ClusterConfig, ClusterSet};
pub use dataset::{load_dataset, validate_dataset, write_dataset, Dataset, Meta, Provenance};
pub use error::{Error, Result};
pub use graph::{Graph, Splits};
pub use sparse::CsrMatrix;
