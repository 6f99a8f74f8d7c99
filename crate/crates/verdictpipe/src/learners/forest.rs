//! Random forest: bootstrap-sampled trees with Gini splits and sqrt
//! feature subsampling per node. Forest probabilities are vote fractions
//! over the trees' leaf-majority classes.

use serde::{Deserialize, Serialize};

use super::{
    argmax, parse_hyper, reject_unknown_keys, LearnerSpec, TrainError, TrainingMeta, N_CLASSES,
};
use crate::rng::DetRng;
use crate::vectorizer::{Dataset, FeatureVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct ForestParams {
    pub trees: usize,
    /// 0 means unlimited depth.
    pub max_depth: usize,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn from_spec(spec: &LearnerSpec) -> Result<Self, TrainError> {
        reject_unknown_keys(&spec.hyper, "rf", &["trees", "max_depth", "bootstrap"])?;
        Ok(ForestParams {
            trees: parse_hyper(&spec.hyper, "trees", 200)?,
            max_depth: parse_hyper(&spec.hyper, "max_depth", 0)?,
            bootstrap: parse_hyper(&spec.hyper, "bootstrap", true)?,
        })
    }
}

/// Classification tree node; `dist` is the class distribution of the
/// node's training samples (used for votes and path attributions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassNode {
    pub feature: u32,
    pub threshold: f64,
    pub left: i32,
    pub right: i32,
    pub dist: [f64; N_CLASSES],
}

impl ClassNode {
    pub fn is_leaf(&self) -> bool {
        self.left < 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub nodes: Vec<ClassNode>,
}

impl ClassTree {
    pub fn leaf_dist(&self, v: &FeatureVector) -> &[f64; N_CLASSES] {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.is_leaf() {
                return &node.dist;
            }
            i = if v.get(node.feature as usize) <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    /// The tree's vote: majority class of the reached leaf.
    pub fn vote(&self, v: &FeatureVector) -> usize {
        argmax(self.leaf_dist(v))
    }

    fn check_integrity(&self, n_features: usize) -> Result<(), String> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.is_leaf() {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<ClassTree>,
}

impl ForestModel {
    pub fn predict_proba(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        let mut votes = [0usize; N_CLASSES];
        for tree in &self.trees {
            votes[tree.vote(v)] += 1;
        }
        let n = self.trees.len() as f64;
        std::array::from_fn(|k| votes[k] as f64 / n)
    }

    pub(crate) fn check_integrity(&self, n_features: usize) -> Result<(), String> {
        for tree in &self.trees {
            tree.check_integrity(n_features)?;
        }
        Ok(())
    }
}

fn gini(counts: &[u64; N_CLASSES]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct TreeBuilder<'a> {
    vectors: &'a [&'a FeatureVector],
    targets: &'a [usize],
    n_features: usize,
    max_depth: usize,
    rng: DetRng,
    nodes: Vec<ClassNode>,
}

impl<'a> TreeBuilder<'a> {
    /// Best Gini split over a shuffled feature scan: consider
    /// sqrt(n_features) candidates, extending the scan until at least one
    /// feature offered a valid (two-sided) split.
    fn best_split(&mut self, samples: &[usize], parent_counts: &[u64; N_CLASSES]) -> Option<Split> {
        let n = samples.len() as f64;
        let parent_gini = gini(parent_counts);
        let subsample = ((self.n_features as f64).sqrt().floor() as usize).max(1);

        let mut features: Vec<usize> = (0..self.n_features).collect();
        self.rng.shuffle(&mut features);

        let mut columns: Vec<Vec<(f64, usize)>> = vec![Vec::new(); self.n_features];
        for &s in samples {
            for &(feature, value) in &self.vectors[s].entries {
                columns[feature].push((value, s));
            }
        }

        let mut best: Option<Split> = None;
        let mut splittable_seen = 0usize;
        for &feature in &features {
            if splittable_seen >= subsample && best.is_some() {
                break;
            }
            let column = &mut columns[feature];
            let zero_count = samples.len() - column.len();
            if column.is_empty() || (zero_count == 0 && all_equal(column)) {
                continue; // constant within the node
            }
            splittable_seen += 1;
            column.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
            let mut nz_counts = [0u64; N_CLASSES];
            for &(_, s) in column.iter() {
                nz_counts[self.targets[s]] += 1;
            }
            // zeros start on the left
            let mut left: [u64; N_CLASSES] =
                std::array::from_fn(|k| parent_counts[k] - nz_counts[k]);
            let mut left_total = zero_count;
            let consider = |left: &[u64; N_CLASSES],
                                left_total: usize,
                                threshold: f64,
                                best: &mut Option<Split>| {
                let right: [u64; N_CLASSES] = std::array::from_fn(|k| parent_counts[k] - left[k]);
                let right_total = samples.len() - left_total;
                let weighted = (left_total as f64 / n) * gini(left)
                    + (right_total as f64 / n) * gini(&right);
                let gain = parent_gini - weighted;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    *best = Some(Split {
                        feature,
                        threshold,
                        gain,
                    });
                }
            };
            if zero_count > 0 {
                consider(&left, left_total, column[0].0 / 2.0, &mut best);
            }
            for i in 0..column.len() {
                let (value, s) = column[i];
                left[self.targets[s]] += 1;
                left_total += 1;
                if left_total == samples.len() {
                    break;
                }
                let next = column[i + 1].0;
                if next > value {
                    consider(&left, left_total, (value + next) / 2.0, &mut best);
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> i32 {
        let mut counts = [0u64; N_CLASSES];
        for &s in &samples {
            counts[self.targets[s]] += 1;
        }
        let total: u64 = counts.iter().sum();
        let dist: [f64; N_CLASSES] = std::array::from_fn(|k| counts[k] as f64 / total as f64);
        let index = self.nodes.len() as i32;
        self.nodes.push(ClassNode {
            feature: 0,
            threshold: 0.0,
            left: -1,
            right: -1,
            dist,
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.max_depth > 0 && depth >= self.max_depth;
        if pure || depth_capped || samples.len() < 2 {
            return index;
        }
        let Some(split) = self.best_split(&samples, &counts) else {
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

pub(crate) fn fit(
    ds: &Dataset,
    params: &ForestParams,
    seed: u64,
) -> Result<(ForestModel, TrainingMeta), TrainError> {
    let order = super::canonical_order(ds);
    let vectors: Vec<&FeatureVector> = order.iter().map(|&i| &ds.vectors[i]).collect();
    let targets: Vec<usize> = order.iter().map(|&i| ds.labels[i].index()).collect();
    let n = vectors.len();

    let mut trees = Vec::with_capacity(params.trees);
    for t in 0..params.trees {
        let mut rng = DetRng::with_stream(seed, t as u64);
        let samples: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(n)).collect()
        } else {
            (0..n).collect()
        };
        let mut builder = TreeBuilder {
            vectors: &vectors,
            targets: &targets,
            n_features: ds.n_features(),
            max_depth: params.max_depth,
            rng,
            nodes: Vec::new(),
        };
        builder.build(samples, 0);
        trees.push(ClassTree {
            nodes: builder.nodes,
        });
    }
    let model = ForestModel { trees };

    // training error as the recorded loss
    let correct = vectors
        .iter()
        .zip(&targets)
        .filter(|(v, &y)| argmax(&model.predict_proba(v)) == y)
        .count();
    let err = 1.0 - correct as f64 / n as f64;
    Ok((
        model,
        TrainingMeta {
            rounds_run: params.trees,
            final_training_loss: err,
            loss_curve: vec![err],
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{separable_dataset, training_accuracy};
    use super::super::{train, LearnerKind, LearnerSpec};
    use super::*;
    use crate::labeler::Disposition;

    #[test]
    fn single_unbootstrapped_tree_memorizes_consistent_data() {
        // scrambled labels against distinct feature vectors: one tree with
        // unlimited depth and no bootstrap must reach training accuracy 1.0
        let mut ds = separable_dataset(30, 21);
        let mut rng = crate::rng::DetRng::new(77);
        for l in ds.labels.iter_mut() {
            *l = Disposition::from_index(rng.gen_range(3)).unwrap();
        }
        let spec = LearnerSpec::new(LearnerKind::RandomForest, 17)
            .set("trees", "1")
            .set("bootstrap", "false");
        let model = train(&ds, &spec).unwrap();
        assert!((training_accuracy(&model, &ds) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vote_fractions_sum_to_one() {
        let ds = separable_dataset(30, 1);
        let spec = LearnerSpec::new(LearnerKind::RandomForest, 5).set("trees", "17");
        let model = train(&ds, &spec).unwrap();
        for v in &ds.vectors {
            let p = model.predict_proba(v);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn max_depth_limits_tree_size() {
        let ds = separable_dataset(60, 2);
        let spec = LearnerSpec::new(LearnerKind::RandomForest, 5)
            .set("trees", "3")
            .set("max_depth", "1");
        let model = train(&ds, &spec).unwrap();
        let super::super::ModelParams::Forest(m) = &model.params else {
            unreachable!()
        };
        for tree in &m.trees {
            assert!(tree.nodes.len() <= 3);
        }
    }

    #[test]
    fn gini_bounds() {
        assert_eq!(gini(&[10, 0, 0]), 0.0);
        let g = gini(&[5, 5, 5]);
        assert!((g - 2.0 / 3.0).abs() < 1e-12);
    }
}
