//! Planted-community citation-style graphs for tests, benches and demos.
//!
//! Each class owns several dense communities and a topic vocabulary. Nodes
//! draw bag-of-words features mostly from their class topic, link densely
//! inside their community, sparsely inside their class and rarely elsewhere.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::seed;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub communities_per_class: usize,
    pub community_size: usize,
    pub feat_dim: usize,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the whole vocabulary instead of the class topic.
    pub feature_noise: f64,
    pub p_community: f64,
    pub p_class: f64,
    pub p_other: f64,
    pub train_per_class: usize,
    pub num_val: usize,
    pub num_test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            communities_per_class: 4,
            community_size: 20,
            feat_dim: 120,
            words_per_node: 10,
            feature_noise: 0.6,
            p_community: 0.3,
            p_class: 0.01,
            p_other: 0.004,
            train_per_class: 5,
            num_val: 60,
            num_test: 120,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn num_nodes(&self) -> usize {
        self.num_classes * self.communities_per_class * self.community_size
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.num_classes < 2 {
            return bad("synthetic.num_classes", "need at least 2 classes");
        }
        if self.communities_per_class == 0 || self.community_size == 0 {
            return bad("synthetic.community_size", "communities must be non-empty");
        }
        if self.feat_dim < self.num_classes {
            return bad("synthetic.feat_dim", "need at least one topic word per class");
        }
        for (name, p) in [
            ("synthetic.feature_noise", self.feature_noise),
            ("synthetic.p_community", self.p_community),
            ("synthetic.p_class", self.p_class),
            ("synthetic.p_other", self.p_other),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(name, "must be a probability");
            }
        }
        let per_class = self.communities_per_class * self.community_size;
        if self.train_per_class > per_class {
            return bad("synthetic.train_per_class", "exceeds nodes per class");
        }
        if self.num_classes * self.train_per_class + self.num_val + self.num_test > self.num_nodes() {
            return bad("synthetic.num_test", "splits need more nodes than the graph has");
        }
        Ok(())
    }
}

/// A generated graph with full labels and Planetoid-style splits.
pub fn generate(config: &SyntheticConfig) -> Result<(Graph, Splits)> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let n = config.num_nodes();
    let per_class = config.communities_per_class * config.community_size;
    // random node ids so that communities are not contiguous
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let class_of = |slot: usize| slot / per_class;
    let community_of = |slot: usize| slot / config.community_size;

    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if community_of(a) == community_of(b) {
                config.p_community
            } else if class_of(a) == class_of(b) {
                config.p_class
            } else {
                config.p_other
            };
            if rng.random::<f64>() < p {
                edges.push((ids[a], ids[b]));
            }
        }
    }

    let topic = config.feat_dim / config.num_classes;
    let mut rows = vec![Vec::new(); n];
    let mut labels = vec![None; n];
    for slot in 0..n {
        let c = class_of(slot);
        let mut words: Vec<usize> = (0..config.words_per_node)
            .map(|_| {
                if rng.random::<f64>() < config.feature_noise {
                    rng.random_range(0..config.feat_dim)
                } else {
                    c * topic + rng.random_range(0..topic)
                }
            })
            .collect();
        words.sort_unstable();
        words.dedup();
        rows[ids[slot]] = words.into_iter().map(|w| (w, 1.0)).collect();
        labels[ids[slot]] = Some(c);
    }
    let features = CsrMatrix::from_rows(config.feat_dim, rows)?;
    let graph = Graph::build(&edges, features, Some(labels), config.num_classes, true)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut taken = vec![0usize; config.num_classes];
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for v in order {
        let c = graph.label(v).expect("every synthetic node is labeled");
        if taken[c] < config.train_per_class {
            taken[c] += 1;
            train.push(v);
        } else {
            rest.push(v);
        }
    }
    let mut val = rest[..config.num_val].to_vec();
    let mut test = rest[config.num_val..config.num_val + config.num_test].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok((graph, Splits { train, val, test }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_splits() {
        let config = SyntheticConfig::default();
        let (g, s) = generate(&config).unwrap();
        assert_eq!(g.num_nodes(), 320);
        assert_eq!(g.feat_dim(), 120);
        assert_eq!(s.train.len(), 20);
        assert_eq!(s.val.len(), 60);
        assert_eq!(s.test.len(), 120);
        s.validate(&g).unwrap();
        for c in 0..4 {
            assert_eq!(s.train.iter().filter(|&&v| g.label(v) == Some(c)).count(), 5);
        }
        let (g2, s2) = generate(&config).unwrap();
        assert_eq!(g, g2);
        assert_eq!(s, s2);
    }

    #[test]
    fn edges_are_homophilous() {
        let (g, _) = generate(&SyntheticConfig::default()).unwrap();
        let same = g.edges().filter(|&(u, v)| g.label(u) == g.label(v)).count();
        assert!(same as f64 > 0.8 * g.num_edges() as f64);
    }

    #[test]
    fn rejects_oversized_splits() {
        let config = SyntheticConfig {
            num_test: 10_000,
            ..Default::default()
        };
        assert!(generate(&config).is_err());
    }
}
