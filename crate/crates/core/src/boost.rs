//! Multi-class gradient-boosted regression trees (multinomial deviance).
//!
//! Each round fits one depth-limited regression tree per class to the
//! residuals `onehot - softmax`, using exact greedy variance-reduction splits,
//! then sets leaf values with the Newton step `(K-1)/K · Σr / Σp(1-p)`.
//! Split search iterates each feature's non-zero entries only; the zero block
//! is folded in from node totals, so sparse bag-of-words rows stay cheap.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Nodes whose residual spread is below this fraction of their energy are pure.
const PURE_RELATIVE_SSE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbdtParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub num_rounds: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.25,
            max_depth: 3,
            num_rounds: 100,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gbdt.learning_rate",
                reason: format!("must be positive, got {}", self.learning_rate),
            });
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter {
                name: "gbdt.max_depth",
                reason: "must be at least 1".into(),
            });
        }
        if self.num_rounds < 1 {
            return Err(Error::InvalidParameter {
                name: "gbdt.num_rounds",
                reason: "must be at least 1".into(),
            });
        }
        if self.min_samples_leaf < 1 || self.min_samples_split < 2 {
            return Err(Error::InvalidParameter {
                name: "gbdt.min_samples_leaf",
                reason: "need min_samples_leaf >= 1 and min_samples_split >= 2".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Axis-aligned regression tree; node 0 is the root, `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Class id of each output column, ascending.
    pub classes: Vec<usize>,
    pub num_features: usize,
    pub learning_rate: f64,
    /// Log prior of each class.
    pub bias: Vec<f64>,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<RegressionTree>>,
    /// Mean training log-loss before any round.
    pub initial_loss: f64,
    /// Mean training log-loss after each round.
    pub train_loss: Vec<f64>,
}

/// Per-feature non-zero entries sorted by value (then sample index).
struct Columns {
    values: Vec<Vec<f64>>,
    samples: Vec<Vec<u32>>,
}

impl Columns {
    fn new(x: ArrayView2<'_, f64>) -> Self {
        let d = x.ncols();
        let mut entries: Vec<Vec<(f64, u32)>> = vec![Vec::new(); d];
        for (s, row) in x.rows().into_iter().enumerate() {
            for (f, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    entries[f].push((v, s as u32));
                }
            }
        }
        let mut values = Vec::with_capacity(d);
        let mut samples = Vec::with_capacity(d);
        for mut col in entries {
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            values.push(col.iter().map(|e| e.0).collect());
            samples.push(col.iter().map(|e| e.1).collect());
        }
        Columns { values, samples }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct NodeStats {
    count: usize,
    sum: f64,
    sq: f64,
    sse: f64,
    depth: usize,
}

#[derive(Clone, Copy, Default)]
struct ScanState {
    nz_sum: f64,
    nz_count: usize,
    cum_sum: f64,
    cum_count: usize,
    last: Option<f64>,
    zero_done: bool,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

struct TreeFitter<'a> {
    x: ArrayView2<'a, f64>,
    columns: &'a Columns,
    params: &'a GbdtParams,
}

impl TreeFitter<'_> {
    /// Fits one tree to `residual`; returns the tree and the leaf index of each sample.
    fn fit(&self, residual: &[f64], prob: &[f64], num_classes: usize) -> (RegressionTree, Vec<usize>) {
        let n = residual.len();
        let mut node_of = vec![0usize; n];
        let mut stats = vec![node_stats(residual.iter().copied(), 0)];
        let mut splits: Vec<Option<(usize, f64, usize, usize)>> = vec![None];
        let mut frontier = vec![0usize];
        let min_leaf = self.params.min_samples_leaf;

        while !frontier.is_empty() {
            let mut active = vec![usize::MAX; stats.len()];
            let mut slots = Vec::new();
            for &t in &frontier {
                let st = &stats[t];
                if st.depth < self.params.max_depth
                    && st.count >= self.params.min_samples_split
                    && st.count >= 2 * min_leaf
                    && st.sse > PURE_RELATIVE_SSE * st.sq
                {
                    active[t] = slots.len();
                    slots.push(t);
                }
            }
            if slots.is_empty() {
                break;
            }
            let mut best: Vec<Option<Candidate>> = vec![None; slots.len()];
            let mut state = vec![ScanState::default(); slots.len()];
            let mut touched: Vec<usize> = Vec::new();
            for f in 0..self.x.ncols() {
                let (vals, samp) = (&self.columns.values[f], &self.columns.samples[f]);
                for &s in samp {
                    let a = active[node_of[s as usize]];
                    if a == usize::MAX {
                        continue;
                    }
                    let st = &mut state[a];
                    if st.nz_count == 0 {
                        touched.push(a);
                    }
                    st.nz_sum += residual[s as usize];
                    st.nz_count += 1;
                }
                let mut consider = |a: usize, st: &ScanState, thr: f64| {
                    let node = &stats[slots[a]];
                    let (nl, nr) = (st.cum_count, node.count - st.cum_count);
                    if nl < min_leaf || nr < min_leaf {
                        return;
                    }
                    let (sl, sr) = (st.cum_sum, node.sum - st.cum_sum);
                    let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - node.sum * node.sum / node.count as f64;
                    if best[a].is_none_or(|b| gain > b.gain) {
                        best[a] = Some(Candidate {
                            gain,
                            feature: f,
                            threshold: thr,
                        });
                    }
                };
                for (k, &s) in samp.iter().enumerate() {
                    let a = active[node_of[s as usize]];
                    if a == usize::MAX {
                        continue;
                    }
                    let v = vals[k];
                    let mut st = state[a];
                    let zero_count = stats[slots[a]].count - st.nz_count;
                    if v > 0.0 && !st.zero_done {
                        st.zero_done = true;
                        if zero_count > 0 {
                            if let Some(last) = st.last {
                                consider(a, &st, midpoint(last, 0.0));
                            }
                            st.cum_sum += stats[slots[a]].sum - st.nz_sum;
                            st.cum_count += zero_count;
                            st.last = Some(0.0);
                        }
                    }
                    if let Some(last) = st.last {
                        if v > last {
                            consider(a, &st, midpoint(last, v));
                        }
                    }
                    st.cum_sum += residual[s as usize];
                    st.cum_count += 1;
                    st.last = Some(v);
                    state[a] = st;
                }
                for &a in &touched {
                    let st = state[a];
                    let zero_count = stats[slots[a]].count - st.nz_count;
                    if !st.zero_done && zero_count > 0 {
                        if let Some(last) = st.last {
                            consider(a, &st, midpoint(last, 0.0));
                        }
                    }
                    state[a] = ScanState::default();
                }
                touched.clear();
            }

            let mut next = Vec::new();
            let mut split_of = vec![None; stats.len()];
            for (a, cand) in best.iter().enumerate() {
                let Some(c) = cand else { continue };
                let t = slots[a];
                let depth = stats[t].depth + 1;
                let left = stats.len();
                stats.push(NodeStats {
                    count: 0,
                    sum: 0.0,
                    sq: 0.0,
                    sse: 0.0,
                    depth,
                });
                stats.push(NodeStats {
                    count: 0,
                    sum: 0.0,
                    sq: 0.0,
                    sse: 0.0,
                    depth,
                });
                splits.push(None);
                splits.push(None);
                splits[t] = Some((c.feature, c.threshold, left, left + 1));
                split_of[t] = Some((c.feature, c.threshold, left));
                next.push(left);
                next.push(left + 1);
            }
            let mut sq = vec![0.0; stats.len()];
            for s in 0..n {
                if let Some((f, thr, left)) = split_of.get(node_of[s]).copied().flatten() {
                    let child = if self.x[[s, f]] <= thr { left } else { left + 1 };
                    node_of[s] = child;
                    stats[child].count += 1;
                    stats[child].sum += residual[s];
                    sq[child] += residual[s] * residual[s];
                }
            }
            for &c in &next {
                let st = &mut stats[c];
                st.sq = sq[c];
                st.sse = (sq[c] - st.sum * st.sum / st.count as f64).max(0.0);
            }
            frontier = next;
        }

        // Newton step per leaf.
        let scale = (num_classes as f64 - 1.0) / num_classes as f64;
        let mut num = vec![0.0; stats.len()];
        let mut den = vec![0.0; stats.len()];
        for s in 0..n {
            num[node_of[s]] += residual[s];
            den[node_of[s]] += prob[s] * (1.0 - prob[s]);
        }
        let nodes = (0..stats.len())
            .map(|t| match splits[t] {
                Some((feature, threshold, left, right)) => TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                },
                None => {
                    let value = if den[t].abs() < 1e-150 {
                        0.0
                    } else {
                        scale * num[t] / den[t]
                    };
                    TreeNode::Leaf { value }
                }
            })
            .collect();
        (RegressionTree { nodes }, node_of)
    }
}

fn node_stats(values: impl Iterator<Item = f64>, depth: usize) -> NodeStats {
    let (mut count, mut sum, mut sq) = (0usize, 0.0, 0.0);
    for v in values {
        count += 1;
        sum += v;
        sq += v * v;
    }
    let sse = if count > 0 {
        (sq - sum * sum / count as f64).max(0.0)
    } else {
        0.0
    };
    NodeStats {
        count,
        sum,
        sq,
        sse,
        depth,
    }
}

fn softmax_row(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Fits a softmax boosting ensemble.
pub fn gbdt_fit(x: ArrayView2<'_, f64>, labels: &[usize], params: &GbdtParams) -> Result<GbdtModel> {
    params.validate()?;
    fit_rounds(x, labels, params, params.num_rounds)
}

fn fit_rounds(x: ArrayView2<'_, f64>, labels: &[usize], params: &GbdtParams, rounds: usize) -> Result<GbdtModel> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
            context: "labels vs feature rows".into(),
        });
    }
    check_finite(x)?;
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let k = classes.len();
    if k < 2 {
        return Err(Error::SingleClass(k));
    }
    let target: Vec<usize> = labels
        .iter()
        .map(|c| classes.binary_search(c).expect("class present"))
        .collect();
    let mut counts = vec![0usize; k];
    for &t in &target {
        counts[t] += 1;
    }
    let bias: Vec<f64> = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();

    let columns = Columns::new(x);
    let fitter = TreeFitter {
        x,
        columns: &columns,
        params,
    };
    let mut raw = vec![0.0; n * k];
    for s in 0..n {
        raw[s * k..(s + 1) * k].copy_from_slice(&bias);
    }
    let mut prob = vec![0.0; n * k];
    let log_loss = |prob: &[f64]| -> f64 {
        (0..n)
            .map(|s| -prob[s * k + target[s]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / n as f64
    };
    for s in 0..n {
        softmax_row(&raw[s * k..(s + 1) * k], &mut prob[s * k..(s + 1) * k]);
    }
    let initial_loss = log_loss(&prob);
    let mut trees = Vec::with_capacity(rounds);
    let mut train_loss = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let fitted: Vec<(RegressionTree, Vec<usize>)> = (0..k)
            .into_par_iter()
            .map(|c| {
                let p: Vec<f64> = (0..n).map(|s| prob[s * k + c]).collect();
                let r: Vec<f64> = (0..n).map(|s| if target[s] == c { 1.0 } else { 0.0 } - p[s]).collect();
                fitter.fit(&r, &p, k)
            })
            .collect();
        for (c, (tree, leaf_of)) in fitted.iter().enumerate() {
            for s in 0..n {
                if let TreeNode::Leaf { value } = tree.nodes[leaf_of[s]] {
                    raw[s * k + c] += params.learning_rate * value;
                }
            }
        }
        for s in 0..n {
            softmax_row(&raw[s * k..(s + 1) * k], &mut prob[s * k..(s + 1) * k]);
        }
        train_loss.push(log_loss(&prob));
        trees.push(fitted.into_iter().map(|(t, _)| t).collect());
    }
    Ok(GbdtModel {
        classes,
        num_features: x.ncols(),
        learning_rate: params.learning_rate,
        bias,
        trees,
        initial_loss,
        train_loss,
    })
}

impl GbdtModel {
    /// Raw additive scores, one column per class.
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.num_features {
            return Err(Error::DimensionMismatch {
                expected: self.num_features,
                actual: x.ncols(),
                context: "gbdt input features".into(),
            });
        }
        let k = self.classes.len();
        let mut out = Array2::zeros((x.nrows(), k));
        for (s, row) in x.rows().into_iter().enumerate() {
            let row = row.to_vec();
            for c in 0..k {
                let tree_sum: f64 = self.trees.iter().map(|round| round[c].predict(&row)).sum();
                out[[s, c]] = self.bias[c] + self.learning_rate * tree_sum;
            }
        }
        Ok(out)
    }

    /// Class probabilities; column `j` corresponds to `self.classes[j]`.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut scores = self.decision_function(x)?;
        let mut buf = vec![0.0; self.classes.len()];
        for mut row in scores.rows_mut() {
            let s = row.to_vec();
            softmax_row(&s, &mut buf);
            row.assign(&ndarray::ArrayView1::from(&buf));
        }
        Ok(scores)
    }

    /// Most probable class id per row; ties go to the lowest class id.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p.rows()
            .into_iter()
            .map(|r| self.classes[argmax(r.as_slice().unwrap())])
            .collect())
    }

    /// The first `rounds` rounds of this ensemble.
    pub fn truncated(&self, rounds: usize) -> GbdtModel {
        let rounds = rounds.min(self.trees.len());
        GbdtModel {
            trees: self.trees[..rounds].to_vec(),
            train_loss: self.train_loss[..rounds].to_vec(),
            ..self.clone()
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Fold index per sample: stratified round-robin after a seeded shuffle per class,
/// or plain round-robin when some class has fewer than `folds` samples.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let by_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    if by_class.iter().all(|members| members.len() >= folds) {
        let mut offset = 0;
        for mut members in by_class {
            members.shuffle(&mut rng);
            for (j, &i) in members.iter().enumerate() {
                fold_of[i] = (offset + j) % folds;
            }
            offset += members.len();
        }
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        for (j, &i) in all.iter().enumerate() {
            fold_of[i] = j % folds;
        }
    }
    fold_of
}

/// Mean held-out accuracy over stratified k-fold cross-validation.
pub fn gbdt_cv_accuracy(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    params: &GbdtParams,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    params.validate()?;
    if folds < 2 {
        return Err(Error::InvalidParameter {
            name: "folds",
            reason: "need at least 2 folds".into(),
        });
    }
    let n = labels.len();
    if n < folds {
        return Err(Error::TooFewSamples { samples: n, folds });
    }
    let fold_of = stratified_folds(labels, folds, seed);
    let mut total = 0.0;
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let xt = x.select(ndarray::Axis(0), &train);
        let yt: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let xs = x.select(ndarray::Axis(0), &test);
        let predicted = match gbdt_fit(xt.view(), &yt, params) {
            Ok(model) => model.predict(xs.view())?,
            // A single-class training fold can only predict that class.
            Err(Error::SingleClass(_)) => vec![yt[0]; test.len()],
            Err(e) => return Err(e),
        };
        let correct = test.iter().zip(&predicted).filter(|(&i, &p)| labels[i] == p).count();
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / folds as f64)
}
