//! K-class gradient boosting on softmax log-loss.
//!
//! Each round fits one regression tree per class to the negative gradient
//! of the multiclass log-loss, with exact greedy splits over sparse
//! columns and leaf values from a single Newton step (-G / (H + lambda)).
//! Predictions accumulate with shrinkage on top of log-prior base scores.

use serde::{Deserialize, Serialize};

use super::{
    parse_hyper, reject_unknown_keys, softmax, LearnerSpec, TrainError, TrainingMeta, N_CLASSES,
};
use crate::vectorizer::{Dataset, FeatureVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct GbtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub reg_lambda: f64,
}

impl GbtParams {
    pub fn from_spec(spec: &LearnerSpec) -> Result<Self, TrainError> {
        reject_unknown_keys(
            &spec.hyper,
            "gbt",
            &[
                "rounds",
                "learning_rate",
                "max_depth",
                "min_child_weight",
                "reg_lambda",
            ],
        )?;
        Ok(GbtParams {
            rounds: parse_hyper(&spec.hyper, "rounds", 100)?,
            learning_rate: parse_hyper(&spec.hyper, "learning_rate", 0.1)?,
            max_depth: parse_hyper(&spec.hyper, "max_depth", 6)?,
            min_child_weight: parse_hyper(&spec.hyper, "min_child_weight", 1.0)?,
            reg_lambda: parse_hyper(&spec.hyper, "reg_lambda", 1.0)?,
        })
    }
}

/// Regression tree node. Leaves have `left == right == -1`; every node
/// carries its Newton-step value so decision paths can be attributed
/// feature by feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegNode {
    pub feature: u32,
    pub threshold: f64,
    pub left: i32,
    pub right: i32,
    pub value: f64,
}

impl RegNode {
    pub fn is_leaf(&self) -> bool {
        self.left < 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn predict(&self, v: &FeatureVector) -> f64 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.is_leaf() {
                return node.value;
            }
            // absent (zero) feature values route left: thresholds sit
            // between non-negative observed values, so 0 <= threshold
            i = if v.get(node.feature as usize) <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    fn check_integrity(&self, n_features: usize) -> Result<(), String> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.is_leaf() {
                if node.right >= 0 {
                    return Err(format!("node {i}: half-leaf"));
                }
                continue;
            }
            if node.feature as usize >= n_features {
                return Err(format!("node {i}: feature index out of range"));
            }
            for child in [node.left, node.right] {
                let child = child as usize;
                if child <= i || child >= self.nodes.len() {
                    return Err(format!("node {i}: child link {child} not forward"));
                }
            }
        }
        Ok(())
    }
}

/// One boosted forest per class per round, on top of log-prior base scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_scores: [f64; N_CLASSES],
    pub learning_rate: f64,
    /// `rounds[r][k]` is round r's tree for class k.
    pub rounds: Vec<Vec<RegTree>>,
}

impl GbtModel {
    pub fn raw_scores(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        let mut scores = self.base_scores;
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                scores[k] += self.learning_rate * tree.predict(v);
            }
        }
        scores
    }

    pub fn predict_proba(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        softmax(&self.raw_scores(v))
    }

    pub(crate) fn check_integrity(&self, n_features: usize) -> Result<(), String> {
        for (r, round) in self.rounds.iter().enumerate() {
            if round.len() != N_CLASSES {
                return Err(format!("round {r}: expected {N_CLASSES} trees"));
            }
            for tree in round {
                tree.check_integrity(n_features)?;
            }
        }
        Ok(())
    }
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Greedy regression-tree builder over (gradient, hessian) targets.
struct TreeBuilder<'a> {
    vectors: &'a [&'a FeatureVector],
    grad: &'a [f64],
    hess: &'a [f64],
    n_features: usize,
    params: &'a GbtParams,
    nodes: Vec<RegNode>,
}

impl<'a> TreeBuilder<'a> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.reg_lambda)
    }

    fn gain_term(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.reg_lambda)
    }

    fn best_split(&self, samples: &[usize]) -> Option<SplitCandidate> {
        let (mut g_total, mut h_total) = (0.0, 0.0);
        for &s in samples {
            g_total += self.grad[s];
            h_total += self.hess[s];
        }
        let parent_term = self.gain_term(g_total, h_total);
        let mcw = self.params.min_child_weight;

        // bucket the node's nonzero values by feature
        let mut columns: Vec<Vec<(f64, usize)>> = vec![Vec::new(); self.n_features];
        for &s in samples {
            for &(feature, value) in &self.vectors[s].entries {
                debug_assert!(value > 0.0, "tf-idf features are positive");
                columns[feature].push((value, s));
            }
        }

        let mut best: Option<SplitCandidate> = None;
        for (feature, column) in columns.iter_mut().enumerate() {
            if column.is_empty() || column.len() == samples.len() && all_equal(column) {
                continue;
            }
            column.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
            let (mut g_nz, mut h_nz) = (0.0, 0.0);
            for &(_, s) in column.iter() {
                g_nz += self.grad[s];
                h_nz += self.hess[s];
            }
            let zero_count = samples.len() - column.len();
            // zeros sit left of every positive value
            let mut g_left = g_total - g_nz;
            let mut h_left = h_total - h_nz;
            let mut left_count = zero_count;
            let evaluate = |g_left: f64,
                                h_left: f64,
                                threshold: f64,
                                best: &mut Option<SplitCandidate>| {
                let g_right = g_total - g_left;
                let h_right = h_total - h_left;
                if h_left < mcw || h_right < mcw {
                    return;
                }
                let gain =
                    0.5 * (self.gain_term(g_left, h_left) + self.gain_term(g_right, h_right)
                        - parent_term);
                if gain > best.as_ref().map_or(1e-12, |b| b.gain) {
                    *best = Some(SplitCandidate {
                        feature,
                        threshold,
                        gain,
                    });
                }
            };
            if zero_count > 0 {
                evaluate(g_left, h_left, column[0].0 / 2.0, &mut best);
            }
            for i in 0..column.len() {
                let (value, s) = column[i];
                g_left += self.grad[s];
                h_left += self.hess[s];
                left_count += 1;
                if left_count == samples.len() {
                    break;
                }
                let next = column[i + 1].0;
                if next > value {
                    evaluate(g_left, h_left, (value + next) / 2.0, &mut best);
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> i32 {
        let (mut g, mut h) = (0.0, 0.0);
        for &s in &samples {
            g += self.grad[s];
            h += self.hess[s];
        }
        let value = self.leaf_value(g, h);
        let index = self.nodes.len() as i32;
        self.nodes.push(RegNode {
            feature: 0,
            threshold: 0.0,
            left: -1,
            right: -1,
            value,
        });
        if depth >= self.params.max_depth || samples.len() < 2 {
            return index;
        }
        let Some(split) = self.best_split(&samples) else {
            return index;
        };
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &s in &samples {
            if self.vectors[s].get(split.feature) <= split.threshold {
                left.push(s);
            } else {
                right.push(s);
            }
        }
        debug_assert!(!left.is_empty() && !right.is_empty());
        let left_index = self.build(left, depth + 1);
        let right_index = self.build(right, depth + 1);
        let node = &mut self.nodes[index as usize];
        node.feature = split.feature as u32;
        node.threshold = split.threshold;
        node.left = left_index;
        node.right = right_index;
        index
    }
}

fn all_equal(column: &[(f64, usize)]) -> bool {
    column.windows(2).all(|w| w[0].0 == w[1].0)
}

fn mean_log_loss(probs: &[[f64; N_CLASSES]], targets: &[usize]) -> f64 {
    let n = targets.len() as f64;
    probs
        .iter()
        .zip(targets)
        .map(|(p, &y)| -(p[y].max(1e-300)).ln())
        .sum::<f64>()
        / n
}

pub(crate) fn fit(
    ds: &Dataset,
    params: &GbtParams,
    _seed: u64,
) -> Result<(GbtModel, TrainingMeta), TrainError> {
    // canonical doc_id order for order-independent float accumulation
    let order = super::canonical_order(ds);
    let vectors: Vec<&FeatureVector> = order.iter().map(|&i| &ds.vectors[i]).collect();
    let targets: Vec<usize> = order.iter().map(|&i| ds.labels[i].index()).collect();
    let n = vectors.len();

    let mut class_counts = [0usize; N_CLASSES];
    for &y in &targets {
        class_counts[y] += 1;
    }
    // log priors, clamped so single-class corpora stay finite
    let base_scores: [f64; N_CLASSES] = std::array::from_fn(|k| {
        let prior = (class_counts[k] as f64 / n as f64).max(1e-12);
        prior.ln()
    });

    let mut raw: Vec<[f64; N_CLASSES]> = vec![base_scores; n];
    let mut probs: Vec<[f64; N_CLASSES]> = raw.iter().map(softmax).collect();
    let mut loss_curve = vec![mean_log_loss(&probs, &targets)];
    let mut rounds = Vec::with_capacity(params.rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for round in 0..params.rounds {
        let mut round_trees = Vec::with_capacity(N_CLASSES);
        for k in 0..N_CLASSES {
            for i in 0..n {
                let p = probs[i][k];
                let y = (targets[i] == k) as usize as f64;
                grad[i] = p - y;
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let mut builder = TreeBuilder {
                vectors: &vectors,
                grad: &grad,
                hess: &hess,
                n_features: ds.n_features(),
                params,
                nodes: Vec::new(),
            };
            builder.build((0..n).collect(), 0);
            let tree = RegTree {
                nodes: builder.nodes,
            };
            for (i, v) in vectors.iter().enumerate() {
                raw[i][k] += params.learning_rate * tree.predict(v);
            }
            round_trees.push(tree);
        }
        for i in 0..n {
            probs[i] = softmax(&raw[i]);
        }
        let loss = mean_log_loss(&probs, &targets);
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { kind: "gbt", round });
        }
        loss_curve.push(loss);
        rounds.push(round_trees);
    }

    let final_loss = *loss_curve.last().expect("nonempty curve");
    Ok((
        GbtModel {
            base_scores,
            learning_rate: params.learning_rate,
            rounds,
        },
        TrainingMeta {
            rounds_run: params.rounds,
            final_training_loss: final_loss,
            loss_curve,
        },
    ))
}
