//! Diagnostics: attribute separability, dominating-label distributions, the
//! edge-sparsity sweep and the self-training composition ablation.

use std::fmt::Write as _;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{elco_augment, elector_attributes, self_train, train_label_map, winner_takes_all, AugmentConfig};
use crate::boost::{argmax, gbdt_cv_accuracy, GbdtParams};
use crate::cluster::{overlapping_clusters, ClusterConfig, ClusterSet};
use crate::error::{Error, Result};
use crate::gnn::{train_gcn, TrainConfig};
use crate::graph::{Graph, Splits};
use crate::seed;
use crate::sparse::CsrMatrix;

const L2_EPOCHS: usize = 200;
const L2_LEARNING_RATE: f64 = 0.01;
const HISTOGRAM_BINS: usize = 20;

/// In-sample error (percent) of a one-vs-rest linear hinge classifier.
///
/// Columns are scaled by their maximum absolute value, then every class
/// weight vector (with bias) is trained by per-sample subgradient steps over
/// a seeded shuffle, 200 epochs, learning rate 0.01, no regularisation.
pub fn l2_error_rate(features: &CsrMatrix, labels: &[usize], seed: u64) -> Result<f64> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
            context: "labels vs feature rows".into(),
        });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let d = features.ncols();
    let mut scale = vec![0.0f64; d];
    for r in 0..n {
        for (j, v) in features.row_iter(r) {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: r, col: j });
            }
            scale[j] = scale[j].max(v.abs());
        }
    }
    let x = features.map_values(|_, j, v| v / scale[j]);
    let target: Vec<usize> = labels
        .iter()
        .map(|c| classes.binary_search(c).expect("present"))
        .collect();
    let k = classes.len();
    let mut w = Array2::<f64>::zeros((k, d));
    let mut b = vec![0.0; k];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed);
    let score = |w: &Array2<f64>, b: &[f64], r: usize, c: usize| -> f64 {
        let row = w.row(c);
        b[c] + x.row_iter(r).map(|(j, v)| row[j] * v).sum::<f64>()
    };
    for _ in 0..L2_EPOCHS {
        order.shuffle(&mut rng);
        for &r in &order {
            for c in 0..k {
                let t = if target[r] == c { 1.0 } else { -1.0 };
                if t * score(&w, &b, r, c) < 1.0 {
                    let mut row = w.row_mut(c);
                    for (j, v) in x.row_iter(r) {
                        row[j] += L2_LEARNING_RATE * t * v;
                    }
                    b[c] += L2_LEARNING_RATE * t;
                }
            }
        }
    }
    let wrong = (0..n)
        .filter(|&r| {
            let scores: Vec<f64> = (0..k).map(|c| score(&w, &b, r, c)).collect();
            argmax(&scores) != target[r]
        })
        .count();
    Ok(100.0 * wrong as f64 / n as f64)
}

/// Most numerous label among labeled members (ties to the lowest class), if any member is labeled.
pub fn dominating_label(members: &[usize], labels: &[Option<usize>]) -> Option<(usize, usize, usize)> {
    let mut counts: Vec<usize> = Vec::new();
    let mut labeled = 0;
    for &v in members {
        if let Some(c) = labels.get(v).copied().flatten() {
            if counts.len() <= c {
                counts.resize(c + 1, 0);
            }
            counts[c] += 1;
            labeled += 1;
        }
    }
    if labeled == 0 {
        return None;
    }
    let best = *counts.iter().max().expect("non-empty");
    let class = counts.iter().position(|&n| n == best).expect("max present");
    Some((class, best, labeled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub dataset: String,
    pub seed: u64,
    pub num_voters: usize,
    pub num_electors: usize,
    pub voter_l2_error: f64,
    pub voter_gbdt_acc: f64,
    pub elector_l2_error: Option<f64>,
    pub elector_gbdt_acc: Option<f64>,
    /// Set when the electors span fewer than two reference classes or are too few to fold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elector_note: Option<String>,
}

/// Linear and boosted-tree separability of voter rows versus elector rows.
///
/// Voters are all ground-truth-labeled nodes; each elector's reference label
/// is the dominating ground-truth label of its cluster.
pub fn separability_report(
    g: &Graph,
    clusters: &ClusterSet,
    dataset: &str,
    gbdt: &GbdtParams,
    folds: usize,
    seed: u64,
) -> Result<SeparabilityReport> {
    let labels = g.labels();
    let voters: Vec<usize> = (0..g.num_nodes()).filter(|&v| labels[v].is_some()).collect();
    let voter_y: Vec<usize> = voters.iter().map(|&v| labels[v].expect("filtered")).collect();
    let voter_x = g.features().dense_rows(&voters);
    let voter_l2_error = l2_error_rate(
        &CsrMatrix::from_dense(voter_x.view()),
        &voter_y,
        seed::derive_seed(seed, "l2-voters"),
    )?;
    let voter_gbdt_acc = 100.0
        * gbdt_cv_accuracy(
            voter_x.view(),
            &voter_y,
            gbdt,
            folds,
            seed::derive_seed(seed, "cv-voters"),
        )?;

    let mut rows = Vec::new();
    let mut elector_y = Vec::new();
    for members in clusters.clusters() {
        if let Some((class, _, _)) = dominating_label(members, labels) {
            rows.push(elector_attributes(members, g.features())?);
            elector_y.push(class);
        }
    }
    let mut report = SeparabilityReport {
        dataset: dataset.to_string(),
        seed,
        num_voters: voters.len(),
        num_electors: rows.len(),
        voter_l2_error,
        voter_gbdt_acc,
        elector_l2_error: None,
        elector_gbdt_acc: None,
        elector_note: None,
    };
    let mut distinct = elector_y.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        report.elector_note = Some(format!(
            "insufficient classes: electors span {} reference class(es)",
            distinct.len()
        ));
        return Ok(report);
    }
    let x = Array2::from_shape_fn((rows.len(), g.feat_dim()), |(i, j)| rows[i][j]);
    report.elector_l2_error = Some(l2_error_rate(
        &CsrMatrix::from_dense(x.view()),
        &elector_y,
        seed::derive_seed(seed, "l2-electors"),
    )?);
    match gbdt_cv_accuracy(
        x.view(),
        &elector_y,
        gbdt,
        folds,
        seed::derive_seed(seed, "cv-electors"),
    ) {
        Ok(acc) => report.elector_gbdt_acc = Some(100.0 * acc),
        Err(Error::TooFewSamples { samples, folds }) => {
            report.elector_note = Some(format!("insufficient electors: {samples} for {folds} folds"));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomLabelHistogram {
    pub tag: String,
    /// Dominating-label proportion of every scored cluster.
    pub proportions: Vec<f64>,
    /// Clusters without any labeled member.
    pub skipped: usize,
    /// `(left edge, density)` of 20 equal bins over (0, 1].
    pub bins: Vec<(f64, f64)>,
}

impl DomLabelHistogram {
    pub fn mean(&self) -> f64 {
        if self.proportions.is_empty() {
            return 0.0;
        }
        self.proportions.iter().sum::<f64>() / self.proportions.len() as f64
    }

    /// Share of scored clusters whose labeled members all agree.
    pub fn fraction_pure(&self) -> f64 {
        if self.proportions.is_empty() {
            return 0.0;
        }
        self.proportions.iter().filter(|&&p| p == 1.0).count() as f64 / self.proportions.len() as f64
    }

    /// `bin_left,density` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,density\n");
        for (left, density) in &self.bins {
            writeln!(out, "{left},{density}").expect("write to string");
        }
        out
    }
}

/// Per-cluster share of the most common label among labeled members.
pub fn dominating_label_distribution(clusters: &ClusterSet, labels: &[Option<usize>], tag: &str) -> DomLabelHistogram {
    let mut proportions = Vec::new();
    let mut skipped = 0;
    for members in clusters.clusters() {
        match dominating_label(members, labels) {
            Some((_, best, labeled)) => proportions.push(best as f64 / labeled as f64),
            None => skipped += 1,
        }
    }
    let width = 1.0 / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &p in &proportions {
        // bin i covers (i/20, (i+1)/20]
        let i = ((p * HISTOGRAM_BINS as f64).ceil() as usize).clamp(1, HISTOGRAM_BINS) - 1;
        counts[i] += 1;
    }
    let total = proportions.len().max(1) as f64;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64 * width, c as f64 / (total * width)))
        .collect();
    DomLabelHistogram {
        tag: tag.to_string(),
        proportions,
        skipped,
        bins,
    }
}

/// Clustering, augmentation and training settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub cluster: ClusterConfig,
    pub augment: AugmentConfig,
    pub train: TrainConfig,
}

/// Seed of the GCN in trial `t` of an experiment seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed::derive_indexed(seed, "trial", trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub fraction: f64,
    pub trial: usize,
    pub gcn: Option<f64>,
    pub elco: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub model: String,
    pub mean_acc: f64,
    pub std: f64,
    pub trials: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityTable {
    pub cells: Vec<SweepCell>,
    pub rows: Vec<SweepRow>,
}

impl SparsityTable {
    /// `fraction,model,mean_acc,std` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,model,mean_acc,std\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.fraction, r.model, r.mean_acc, r.std).expect("write to string");
        }
        out
    }

    pub fn row(&self, fraction: f64, model: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.fraction == fraction && r.model == model)
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs the full pipeline once on `g`: cluster, augment and train on G′.
pub fn elco_accuracy(g: &Graph, splits: &Splits, config: &PipelineConfig, seed: u64, train_seed: u64) -> Result<f64> {
    let clusters = overlapping_clusters(g, &config.cluster, seed::derive_seed(seed, "cluster"))?;
    let aug = elco_augment(g, splits, &clusters, &config.augment)?;
    let train = TrainConfig {
        seed: train_seed,
        ..config.train
    };
    Ok(train_gcn(&aug.graph, &aug.splits, &train)?.test_acc)
}

/// Baseline and augmented test accuracy after dropping edge fractions.
///
/// Every (fraction, trial) cell runs independently; a failed cell is kept
/// with its error and left out of the means. Trial `t` trains with
/// [`trial_seed`]`(seed, t)` at every fraction, so the `0.0` row equals direct
/// training on the unmodified graph.
pub fn sparsity_sweep(
    g: &Graph,
    splits: &Splits,
    fractions: &[f64],
    trials: usize,
    config: &PipelineConfig,
    seed: u64,
) -> Result<SparsityTable> {
    for &f in fractions {
        if !(0.0..1.0).contains(&f) {
            return Err(Error::InvalidParameter {
                name: "fractions",
                reason: format!("{f} is outside [0, 1)"),
            });
        }
    }
    let jobs: Vec<(f64, usize)> = fractions
        .iter()
        .flat_map(|&f| (0..trials).map(move |t| (f, t)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(fraction, trial)| {
            let run = || -> Result<(f64, f64)> {
                let dropped = g.drop_edges(
                    fraction,
                    seed::derive_indexed(seed, &format!("drop-{fraction}"), trial as u64),
                )?;
                let ts = trial_seed(seed, trial);
                let train = TrainConfig {
                    seed: ts,
                    ..config.train
                };
                let gcn = train_gcn(&dropped, splits, &train)?.test_acc;
                let elco = elco_accuracy(
                    &dropped,
                    splits,
                    config,
                    seed::derive_indexed(seed, "pipeline", trial as u64),
                    ts,
                )?;
                Ok((gcn, elco))
            };
            match run() {
                Ok((gcn, elco)) => SweepCell {
                    fraction,
                    trial,
                    gcn: Some(gcn),
                    elco: Some(elco),
                    error: None,
                },
                Err(e) => SweepCell {
                    fraction,
                    trial,
                    gcn: None,
                    elco: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut rows = Vec::new();
    for &fraction in fractions {
        for model in ["gcn", "elco"] {
            let accs: Vec<f64> = cells
                .iter()
                .filter(|c| c.fraction == fraction)
                .filter_map(|c| if model == "gcn" { c.gcn } else { c.elco })
                .collect();
            let (mean_acc, std) = mean_std(&accs);
            rows.push(SweepRow {
                fraction,
                model: model.to_string(),
                mean_acc,
                std,
                trials: accs.len(),
                missing: trials - accs.len(),
            });
        }
    }
    Ok(SparsityTable { cells, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    Electors,
    Voters,
    Mixture,
}

impl Composition {
    pub const ALL: [Composition; 3] = [Composition::Electors, Composition::Voters, Composition::Mixture];

    pub fn name(&self) -> &'static str {
        match self {
            Composition::Electors => "electors",
            Composition::Voters => "voters",
            Composition::Mixture => "mixture",
        }
    }
}

impl std::str::FromStr for Composition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Composition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "composition",
                reason: format!("expected electors, voters or mixture, got {s:?}"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub iteration: usize,
    pub probe_acc: f64,
    pub cum_promoted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub composition: Composition,
    pub probe_size: usize,
    pub training_rows: usize,
    /// Majority-class rate of the probe set.
    pub chance_level: f64,
    pub uniform_chance: f64,
    pub rows: Vec<AblationRow>,
    pub protocol: String,
}

impl AblationReport {
    pub fn final_probe_acc(&self) -> Option<f64> {
        self.rows.last().map(|r| r.probe_acc)
    }

    /// `iter,probe_acc,cum_promoted` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,probe_acc,cum_promoted\n");
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.iteration, r.probe_acc, r.cum_promoted).expect("write to string");
        }
        out
    }
}

/// Self-training with different classifier training sets, scored on held-out electors.
///
/// Electors labeled by winner-takes-all are split (seeded) into a probe set of
/// `probe_fraction` and a seed set. The classifier starts from the seed-set
/// electors, the training voters, or both; unlabeled electors are the
/// promotion candidates. After every fit the probe accuracy is recorded.
pub fn selftrain_ablation(
    g: &Graph,
    splits: &Splits,
    clusters: &ClusterSet,
    composition: Composition,
    config: &AugmentConfig,
    probe_fraction: f64,
    seed: u64,
) -> Result<AblationReport> {
    if !(probe_fraction > 0.0 && probe_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "probe_fraction",
            reason: "must lie in (0, 1)".into(),
        });
    }
    let train_labels = train_label_map(g, splits);
    let mut observed = Vec::new();
    let mut unlabeled = Vec::new();
    let mut attributes = Vec::with_capacity(clusters.len());
    for (ci, members) in clusters.clusters().iter().enumerate() {
        attributes.push(elector_attributes(members, g.features())?);
        match winner_takes_all(members, &train_labels, config.min_dominant_count) {
            Some(c) => observed.push((ci, c)),
            None => unlabeled.push(ci),
        }
    }
    observed.shuffle(&mut seed::rng(seed::derive_seed(seed, "probe")));
    let probe_size = ((observed.len() as f64 * probe_fraction).round() as usize)
        .clamp(usize::from(!observed.is_empty()), observed.len());
    let (probe, seed_part) = observed.split_at(probe_size);
    if probe.is_empty() {
        return Err(Error::EmptyMask("probe"));
    }

    let m = attributes.len();
    let mut x = Array2::zeros((m + splits.train.len(), g.feat_dim()));
    for (i, a) in attributes.iter().enumerate() {
        x.row_mut(i).assign(&ndarray::ArrayView1::from(a));
    }
    let voter_rows = g.features().dense_rows(&splits.train);
    x.slice_mut(ndarray::s![m.., ..]).assign(&voter_rows);
    let voters: Vec<(usize, usize)> = splits
        .train
        .iter()
        .enumerate()
        .map(|(i, &v)| (m + i, g.label(v).expect("train nodes are labeled")))
        .collect();
    let initial: Vec<(usize, usize)> = match composition {
        Composition::Electors => seed_part.to_vec(),
        Composition::Voters => voters,
        Composition::Mixture => seed_part.iter().copied().chain(voters).collect(),
    };
    let probe_rows: Vec<usize> = probe.iter().map(|&(r, _)| r).collect();
    let probe_x = x.select(Axis(0), &probe_rows);
    let mut accs = Vec::new();
    let run = self_train(x.view(), &initial, &unlabeled, config, |_, model| {
        let predicted = model.predict(probe_x.view())?;
        let correct = predicted.iter().zip(probe).filter(|(p, (_, c))| *p == c).count();
        accs.push(correct as f64 / probe.len() as f64);
        Ok(())
    })?;
    let mut cum = 0;
    let rows = run
        .steps
        .iter()
        .zip(&accs)
        .map(|(s, &probe_acc)| {
            cum += s.promoted;
            AblationRow {
                iteration: s.iteration,
                probe_acc,
                cum_promoted: cum,
            }
        })
        .collect();
    let mut counts = vec![0usize; g.num_classes()];
    for &(_, c) in probe {
        counts[c] += 1;
    }
    Ok(AblationReport {
        composition,
        probe_size,
        training_rows: initial.len(),
        chance_level: *counts.iter().max().expect("classes") as f64 / probe.len() as f64,
        uniform_chance: 1.0 / g.num_classes() as f64,
        rows,
        protocol: format!(
            "probe = {probe_size} winner-takes-all electors held out ({probe_fraction} of {}); probe_acc measured after each classifier fit",
            observed.len()
        ),
    })
}

/// Voter and elector attribute rows of G′ with labels for external embedding
/// plots: `kind,id,label,f0,...`; unlabeled rows carry `-1`.
pub fn embedding_export_csv(augmented: &Graph, elector_start: usize) -> String {
    let d = augmented.feat_dim();
    let mut out = String::from("kind,id,label");
    for j in 0..d {
        write!(out, ",f{j}").expect("write to string");
    }
    out.push('\n');
    let mut dense = vec![0.0; d];
    for v in 0..augmented.num_nodes() {
        dense.iter_mut().for_each(|x| *x = 0.0);
        for (j, x) in augmented.features().row_iter(v) {
            dense[j] = x;
        }
        let kind = if v < elector_start { "voter" } else { "elector" };
        let label = augmented.label(v).map_or(-1, |c| c as i64);
        write!(out, "{kind},{v},{label}").expect("write to string");
        for x in &dense {
            write!(out, ",{x}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, SyntheticConfig};
    use rand::Rng;

    #[test]
    fn l2_examples() {
        let mut rng = seed::rng(4);
        let rows: Vec<Vec<(usize, f64)>> = (0..40)
            .map(|i| {
                let c = (i % 2) as f64;
                vec![
                    (0, 1.0 + 4.0 * c + rng.random_range(0.0..1.0)),
                    (1, rng.random_range(0.0..1.0)),
                ]
            })
            .collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let x = CsrMatrix::from_rows(2, rows).unwrap();
        assert_eq!(l2_error_rate(&x, &y, 0).unwrap(), 0.0);

        let same = CsrMatrix::from_rows(2, vec![vec![(0, 1.0), (1, 2.0)]; 40]).unwrap();
        let e = l2_error_rate(&same, &y, 0).unwrap();
        assert!((e - 50.0).abs() <= 2.0, "{e}");

        assert!(matches!(l2_error_rate(&same, &[1; 40], 0), Err(Error::SingleClass(1))));
    }

    #[test]
    fn l2_separable_case_is_scale_invariant() {
        let rows: Vec<Vec<(usize, f64)>> = (0..20).map(|i| vec![(0, if i % 2 == 0 { 1.0 } else { 3.0 })]).collect();
        let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let x = CsrMatrix::from_rows(1, rows).unwrap();
        let scaled = x.map_values(|_, _, v| 7.5 * v);
        assert_eq!(l2_error_rate(&x, &y, 1).unwrap(), 0.0);
        assert_eq!(l2_error_rate(&scaled, &y, 1).unwrap(), 0.0);
    }

    #[test]
    fn dominating_proportions() {
        let labels = vec![Some(0), Some(0), Some(0), Some(1), Some(2), None];
        let clusters = ClusterSet::new(6, vec![vec![0, 1, 2], vec![0, 1, 3, 4], vec![5], vec![2, 5]], 1.0).unwrap();
        let h = dominating_label_distribution(&clusters, &labels, "G");
        assert_eq!(h.proportions, vec![1.0, 0.5, 1.0]);
        assert_eq!(h.skipped, 1);
        assert_eq!(h.bins.len(), 20);
        let integral: f64 = h.bins.iter().map(|(_, d)| d / 20.0).sum();
        assert!((integral - 1.0).abs() < 1e-12);
        assert_eq!(h.bins[19].1, 2.0 / 3.0 * 20.0);
        assert_eq!(h.bins[9].1, 1.0 / 3.0 * 20.0);
        assert!((h.fraction_pure() - 2.0 / 3.0).abs() < 1e-15);
        assert!(h.to_csv().starts_with("bin_left,density\n0,0\n0.05,0\n"));
    }

    fn small_pipeline() -> (Graph, Splits, ClusterSet) {
        let (g, s) = generate(&SyntheticConfig {
            num_classes: 3,
            communities_per_class: 2,
            community_size: 15,
            feat_dim: 30,
            train_per_class: 6,
            num_val: 20,
            num_test: 40,
            p_community: 0.5,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let clusters = overlapping_clusters(
            &g,
            &ClusterConfig {
                min_cluster_size: 3,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        (g, s, clusters)
    }

    #[test]
    fn separability_report_on_synthetic_graph() {
        let (g, _, clusters) = small_pipeline();
        let params = GbdtParams {
            num_rounds: 10,
            ..Default::default()
        };
        let r = separability_report(&g, &clusters, "synthetic", &params, 3, 0).unwrap();
        assert_eq!(r.num_voters, g.num_nodes());
        for v in [
            Some(r.voter_l2_error),
            r.elector_l2_error,
            Some(r.voter_gbdt_acc),
            r.elector_gbdt_acc,
        ] {
            let v = v.unwrap();
            assert!((0.0..=100.0).contains(&v));
        }
        let one = ClusterSet::new(g.num_nodes(), vec![(0..10).collect()], 1.0).unwrap();
        let r = separability_report(&g, &one, "synthetic", &params, 3, 0).unwrap();
        assert!(r.elector_note.unwrap().contains("insufficient classes"));
        assert_eq!(r.elector_l2_error, None);
    }

    #[test]
    fn sweep_at_zero_matches_direct_training() {
        let (g, s, _) = small_pipeline();
        let config = PipelineConfig {
            train: TrainConfig {
                max_epochs: 60,
                patience: 30,
                ..Default::default()
            },
            augment: AugmentConfig {
                gbdt: GbdtParams {
                    num_rounds: 5,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        };
        let table = sparsity_sweep(&g, &s, &[0.0, 0.5], 2, &config, 11).unwrap();
        for t in 0..2 {
            let direct = train_gcn(
                &g,
                &s,
                &TrainConfig {
                    seed: trial_seed(11, t),
                    ..config.train
                },
            )
            .unwrap()
            .test_acc;
            let cell = table.cells.iter().find(|c| c.fraction == 0.0 && c.trial == t).unwrap();
            assert_eq!(cell.gcn, Some(direct));
        }
        assert_eq!(table.rows.len(), 4);
        let again = sparsity_sweep(&g, &s, &[0.0, 0.5], 2, &config, 11).unwrap();
        assert_eq!(table.to_csv(), again.to_csv());
        assert!(sparsity_sweep(&g, &s, &[1.0], 1, &config, 0).is_err());
    }

    #[test]
    fn ablation_reports_each_fit() {
        let (g, s, clusters) = small_pipeline();
        let config = AugmentConfig {
            gbdt: GbdtParams {
                num_rounds: 10,
                ..Default::default()
            },
            ..Default::default()
        };
        for comp in Composition::ALL {
            match selftrain_ablation(&g, &s, &clusters, comp, &config, 0.3, 5) {
                Ok(r) => {
                    assert!(!r.rows.is_empty() || comp == Composition::Electors);
                    assert!(r.rows.windows(2).all(|w| w[1].cum_promoted >= w[0].cum_promoted));
                    assert!(r.rows.iter().all(|row| (0.0..=1.0).contains(&row.probe_acc)));
                    assert!(r.to_csv().starts_with("iter,probe_acc,cum_promoted\n"));
                }
                Err(Error::EmptyMask("probe")) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!("mixture".parse::<Composition>().unwrap(), Composition::Mixture);
        assert!("both".parse::<Composition>().is_err());
    }

    #[test]
    fn export_marks_electors_and_unlabeled_rows() {
        let f = CsrMatrix::from_rows(2, vec![vec![(0, 1.0)], vec![(1, 2.5)], vec![(0, 0.5), (1, 1.25)]]).unwrap();
        let g = Graph::build(&[(0, 2), (1, 2)], f, Some(vec![Some(1), None, Some(0)]), 2, true).unwrap();
        let csv = embedding_export_csv(&g, 2);
        assert_eq!(
            csv,
            "kind,id,label,f0,f1\nvoter,0,1,1,0\nvoter,1,-1,0,2.5\nelector,2,0,0.5,1.25\n"
        );
    }

    #[test]
    fn mean_std_is_population() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }
}
