//! Elector synthesis, winner-takes-all labeling, self-training diffusion and
//! the merge that produces the augmented graph.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{argmax, gbdt_fit, GbdtModel, GbdtParams};
use crate::cluster::ClusterSet;
use crate::dataset::Provenance;
use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub min_dominant_count: usize,
    pub labeling_threshold: f64,
    pub diffusion_iters: usize,
    pub gbdt: GbdtParams,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            min_dominant_count: 2,
            labeling_threshold: 0.99,
            diffusion_iters: 10,
            gbdt: GbdtParams::default(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.labeling_threshold > 0.5 && self.labeling_threshold <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "augment.labeling_threshold",
                reason: format!("must lie in (0.5, 1], got {}", self.labeling_threshold),
            });
        }
        if self.diffusion_iters < 1 {
            return Err(Error::InvalidParameter {
                name: "augment.diffusion_iters",
                reason: "must be at least 1".into(),
            });
        }
        if self.min_dominant_count < 1 {
            return Err(Error::InvalidParameter {
                name: "augment.min_dominant_count",
                reason: "must be at least 1".into(),
            });
        }
        self.gbdt.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ElectorLabel {
    Observed(usize),
    Predicted { class: usize, confidence: f64 },
    Unlabeled,
}

impl ElectorLabel {
    pub fn class(&self) -> Option<usize> {
        match *self {
            ElectorLabel::Observed(c) | ElectorLabel::Predicted { class: c, .. } => Some(c),
            ElectorLabel::Unlabeled => None,
        }
    }

    pub fn source(&self) -> &'static str {
        match self {
            ElectorLabel::Observed(_) => "observed",
            ElectorLabel::Predicted { .. } => "predicted",
            ElectorLabel::Unlabeled => "unlabeled",
        }
    }

    pub fn confidence(&self) -> Option<f64> {
        match *self {
            ElectorLabel::Predicted { confidence, .. } => Some(confidence),
            _ => None,
        }
    }
}

/// A synthesized node standing for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elector {
    /// Node id in the augmented graph.
    pub id: usize,
    pub cluster: usize,
    pub attributes: Vec<f64>,
    pub label: ElectorLabel,
}

/// Mean of the member feature rows.
pub fn elector_attributes(cluster: &[usize], features: &CsrMatrix) -> Result<Vec<f64>> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let mut acc = vec![0.0; features.ncols()];
    for &v in cluster {
        if v >= features.nrows() {
            return Err(Error::InvalidGraph(format!(
                "cluster member {v} out of range ({} rows)",
                features.nrows()
            )));
        }
        for (j, x) in features.row_iter(v) {
            acc[j] += x;
        }
    }
    let n = cluster.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    Ok(acc)
}

/// Most numerous label among labeled members, if it is unique and occurs at
/// least `min_dominant_count` times.
pub fn winner_takes_all(cluster: &[usize], train_labels: &[Option<usize>], min_dominant_count: usize) -> Option<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &v in cluster {
        if let Some(c) = train_labels.get(v).copied().flatten() {
            *counts.entry(c).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    let mut winners = counts.iter().filter(|(_, &n)| n == best);
    let (&class, _) = winners.next()?;
    if winners.next().is_some() || best < min_dominant_count {
        return None;
    }
    Some(class)
}

/// Labels of training nodes only; every other node maps to `None`.
pub fn train_label_map(g: &Graph, splits: &Splits) -> Vec<Option<usize>> {
    let mut out = vec![None; g.num_nodes()];
    for &v in &splits.train {
        out[v] = g.label(v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffusionStep {
    pub iteration: usize,
    /// Training rows used to fit this iteration's classifier.
    pub labeled: usize,
    pub promoted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTraining {
    /// `(row, class, confidence)` in promotion order.
    pub promoted: Vec<(usize, usize, f64)>,
    pub steps: Vec<DiffusionStep>,
    /// Set when the initial rows span fewer than two classes.
    pub skipped: bool,
}

/// Confidence-gated self-training over the rows of `x`.
///
/// Each iteration fits the classifier on `initial` plus everything promoted so
/// far, hands the model to `observe`, then promotes every remaining candidate
/// whose top class probability reaches the threshold. Stops after an iteration
/// without promotions; at least one classifier is always fitted.
pub fn self_train(
    x: ArrayView2<'_, f64>,
    initial: &[(usize, usize)],
    candidates: &[usize],
    config: &AugmentConfig,
    mut observe: impl FnMut(usize, &GbdtModel) -> Result<()>,
) -> Result<SelfTraining> {
    config.validate()?;
    let mut classes: Vec<usize> = initial.iter().map(|&(_, c)| c).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut out = SelfTraining {
        promoted: Vec::new(),
        steps: Vec::new(),
        skipped: classes.len() < 2,
    };
    if out.skipped {
        return Ok(out);
    }
    let mut rows: Vec<usize> = initial.iter().map(|&(r, _)| r).collect();
    let mut targets: Vec<usize> = initial.iter().map(|&(_, c)| c).collect();
    let mut remaining: Vec<usize> = candidates.to_vec();
    for iteration in 1..=config.diffusion_iters {
        let wrap = |e: Error| Error::Diffusion {
            iteration,
            source: Box::new(e),
        };
        let model = gbdt_fit(x.select(Axis(0), &rows).view(), &targets, &config.gbdt).map_err(wrap)?;
        observe(iteration, &model).map_err(wrap)?;
        if remaining.is_empty() {
            out.steps.push(DiffusionStep {
                iteration,
                labeled: rows.len(),
                promoted: 0,
            });
            break;
        }
        let proba = model
            .predict_proba(x.select(Axis(0), &remaining).view())
            .map_err(wrap)?;
        let mut still = Vec::with_capacity(remaining.len());
        let mut promoted = 0;
        for (i, &r) in remaining.iter().enumerate() {
            let p = proba.row(i);
            let k = argmax(p.as_slice().expect("contiguous row"));
            if p[k] >= config.labeling_threshold {
                out.promoted.push((r, model.classes[k], p[k]));
                promoted += 1;
            } else {
                still.push(r);
            }
        }
        out.steps.push(DiffusionStep {
            iteration,
            labeled: rows.len(),
            promoted,
        });
        for &(r, c, _) in &out.promoted[out.promoted.len() - promoted..] {
            rows.push(r);
            targets.push(c);
        }
        remaining = still;
        if promoted == 0 || remaining.is_empty() {
            break;
        }
    }
    Ok(out)
}

fn attribute_matrix(electors: &[Elector]) -> Array2<f64> {
    let d = electors.first().map_or(0, |e| e.attributes.len());
    let mut x = Array2::zeros((electors.len(), d));
    for (mut row, e) in x.rows_mut().into_iter().zip(electors) {
        row.assign(&ndarray::ArrayView1::from(&e.attributes));
    }
    x
}

/// Labels unlabeled electors by self-training on the already-labeled ones.
pub fn diffuse_labels(electors: &[Elector], config: &AugmentConfig) -> Result<(Vec<Elector>, SelfTraining)> {
    let initial: Vec<(usize, usize)> = electors
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.label.class().map(|c| (i, c)))
        .collect();
    let candidates: Vec<usize> = (0..electors.len())
        .filter(|&i| electors[i].label == ElectorLabel::Unlabeled)
        .collect();
    let x = attribute_matrix(electors);
    let run = self_train(x.view(), &initial, &candidates, config, |_, _| Ok(()))?;
    let mut out = electors.to_vec();
    for &(i, class, confidence) in &run.promoted {
        out[i].label = ElectorLabel::Predicted { class, confidence };
    }
    Ok((out, run))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGraph {
    pub graph: Graph,
    pub splits: Splits,
    /// Id of the first elector; electors occupy `elector_start..graph.num_nodes()`.
    pub elector_start: usize,
    pub electors: Vec<Elector>,
    pub diffusion: SelfTraining,
}

impl AugmentedGraph {
    /// Electors labeled by winner-takes-all, by diffusion, and left unlabeled.
    pub fn label_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for e in &self.electors {
            match e.label {
                ElectorLabel::Observed(_) => counts.0 += 1,
                ElectorLabel::Predicted { .. } => counts.1 += 1,
                ElectorLabel::Unlabeled => counts.2 += 1,
            }
        }
        counts
    }

    pub fn records(&self) -> Vec<ElectorRecord> {
        self.electors
            .iter()
            .map(|e| ElectorRecord {
                id: e.id,
                cluster: e.cluster,
                label_source: e.label.source().to_string(),
                class: e.label.class(),
                confidence: e.label.confidence(),
            })
            .collect()
    }
}

/// One entry of `electors.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectorRecord {
    pub id: usize,
    pub cluster: usize,
    pub label_source: String,
    pub class: Option<usize>,
    pub confidence: Option<f64>,
}

/// `electors.json` contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectorsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub electors: Vec<ElectorRecord>,
}

/// Full augmentation: one elector per cluster, labeled by winner-takes-all and
/// then diffusion, merged into `g` with an edge to every cluster member.
pub fn elco_augment(
    g: &Graph,
    splits: &Splits,
    clusters: &ClusterSet,
    config: &AugmentConfig,
) -> Result<AugmentedGraph> {
    config.validate()?;
    splits.validate(g)?;
    if clusters.num_nodes() != g.num_nodes() {
        return Err(Error::InvalidGraph(format!(
            "clusters cover {} nodes but the graph has {}",
            clusters.num_nodes(),
            g.num_nodes()
        )));
    }
    let n = g.num_nodes();
    let train_labels = train_label_map(g, splits);
    let electors: Vec<Elector> = clusters
        .clusters()
        .par_iter()
        .enumerate()
        .map(|(ci, members)| {
            let attributes = elector_attributes(members, g.features())?;
            let label = match winner_takes_all(members, &train_labels, config.min_dominant_count) {
                Some(c) => ElectorLabel::Observed(c),
                None => ElectorLabel::Unlabeled,
            };
            Ok(Elector {
                id: n + ci,
                cluster: ci,
                attributes,
                label,
            })
        })
        .collect::<Result<_>>()?;
    let (electors, diffusion) = diffuse_labels(&electors, config)?;

    let mut x = Array2::zeros((electors.len(), g.feat_dim()));
    for (mut row, e) in x.rows_mut().into_iter().zip(&electors) {
        row.assign(&ndarray::ArrayView1::from(&e.attributes));
    }
    let edges: Vec<(usize, usize)> = electors
        .iter()
        .flat_map(|e| clusters.cluster(e.cluster).iter().map(move |&v| (v, e.id)))
        .collect();
    let labels: Vec<Option<usize>> = electors.iter().map(|e| e.label.class()).collect();
    let graph = g.merge(x.view(), &edges, Some(&labels))?;
    let mut train = splits.train.clone();
    train.extend(electors.iter().filter(|e| e.label.class().is_some()).map(|e| e.id));
    Ok(AugmentedGraph {
        graph,
        splits: Splits {
            train,
            val: splits.val.clone(),
            test: splits.test.clone(),
        },
        elector_start: n,
        electors,
        diffusion,
    })
}
