//! The four classifier families over sparse TF-IDF features: gradient
//! boosted trees, random forest, one-vs-rest linear SVM, and a single
//! hidden-layer network.
//!
//! All training is fully determined by `LearnerSpec::seed`: sampling and
//! shuffling run on counter-based substreams keyed to a canonical
//! (doc_id-sorted) sample order, so permuting dataset rows changes nothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeler::Disposition;
use crate::vectorizer::{Dataset, FeatureVector};

mod bundle;
mod forest;
mod gbt;
mod mlp;
mod svm;

pub use bundle::{BundleError, ModelBundle, FORMAT_VERSION};
pub use forest::{ClassNode, ClassTree, ForestModel};
pub use gbt::{GbtModel, RegNode, RegTree};
pub use mlp::{MlpGrad, MlpModel};
pub use svm::LinearModel;

pub const N_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Gbt,
    RandomForest,
    LinearSvm,
    Mlp,
}

impl LearnerKind {
    pub fn parse(s: &str) -> Option<LearnerKind> {
        match s {
            "gbt" => Some(LearnerKind::Gbt),
            "rf" => Some(LearnerKind::RandomForest),
            "svm" => Some(LearnerKind::LinearSvm),
            "mlp" => Some(LearnerKind::Mlp),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Gbt => "gbt",
            LearnerKind::RandomForest => "rf",
            LearnerKind::LinearSvm => "svm",
            LearnerKind::Mlp => "mlp",
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has a single class; {0} requires at least two")]
    SingleClassDataset(&'static str),
    #[error("training loss became non-finite at {kind} round {round} (divergence)")]
    NonFiniteLoss { kind: &'static str, round: usize },
    #[error("unknown hyperparameter {key:?} for {kind}")]
    UnknownHyperKey { kind: &'static str, key: String },
    #[error("bad value {value:?} for hyperparameter {key:?}: {reason}")]
    BadHyperValue {
        key: String,
        value: String,
        reason: String,
    },
}

/// What to train: classifier family, hyperparameter overrides, and the
/// seed that fully determines every stochastic choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub hyper: BTreeMap<String, String>,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, seed: u64) -> Self {
        LearnerSpec {
            kind,
            hyper: BTreeMap::new(),
            seed,
        }
    }

    pub fn set(mut self, key: &str, value: &str) -> Self {
        self.hyper.insert(key.to_string(), value.to_string());
        self
    }

    /// Reject unknown hyperparameter keys and malformed values.
    pub fn validate(&self) -> Result<(), TrainError> {
        match self.kind {
            LearnerKind::Gbt => gbt::GbtParams::from_spec(self).map(|_| ()),
            LearnerKind::RandomForest => forest::ForestParams::from_spec(self).map(|_| ()),
            LearnerKind::LinearSvm => svm::SvmParams::from_spec(self).map(|_| ()),
            LearnerKind::Mlp => mlp::MlpParams::from_spec(self).map(|_| ()),
        }
    }
}

pub(crate) fn parse_hyper<T: std::str::FromStr>(
    hyper: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, TrainError> {
    match hyper.get(key) {
        None => Ok(default),
        Some(raw) => raw.parse().map_err(|_| TrainError::BadHyperValue {
            key: key.to_string(),
            value: raw.clone(),
            reason: format!("expected {}", std::any::type_name::<T>()),
        }),
    }
}

pub(crate) fn reject_unknown_keys(
    hyper: &BTreeMap<String, String>,
    kind: &'static str,
    allowed: &[&str],
) -> Result<(), TrainError> {
    for key in hyper.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(TrainError::UnknownHyperKey {
                kind,
                key: key.clone(),
            });
        }
    }
    Ok(())
}

/// Training bookkeeping: rounds (or epochs) actually run, the final
/// training loss, and the per-round loss curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub rounds_run: usize,
    pub final_training_loss: f64,
    pub loss_curve: Vec<f64>,
}

/// Model parameters, by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelParams {
    Gbt(GbtModel),
    Forest(ForestModel),
    Linear(LinearModel),
    Mlp(MlpModel),
}

/// A trained classifier plus its class names and training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    pub class_names: Vec<String>,
    pub n_features: usize,
    pub params: ModelParams,
    pub training_meta: TrainingMeta,
}

/// Numerically stable softmax.
pub(crate) fn softmax(scores: &[f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; N_CLASSES];
    let mut sum = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

pub(crate) fn argmax(xs: &[f64; N_CLASSES]) -> usize {
    let mut best = 0;
    for i in 1..N_CLASSES {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// Indices of `ds` sorted by doc_id: the canonical sample order that makes
/// training independent of dataset row order.
pub(crate) fn canonical_order(ds: &Dataset) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by(|&a, &b| ds.doc_ids[a].cmp(&ds.doc_ids[b]));
    order
}

fn distinct_classes(ds: &Dataset) -> usize {
    let mut seen = [false; N_CLASSES];
    for l in &ds.labels {
        seen[l.index()] = true;
    }
    seen.iter().filter(|&&s| s).count()
}

/// Train a classifier of the requested family.
pub fn train(ds: &Dataset, spec: &LearnerSpec) -> Result<TrainedModel, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let classes = distinct_classes(ds);
    let (params, meta) = match spec.kind {
        LearnerKind::Gbt => {
            let p = gbt::GbtParams::from_spec(spec)?;
            let (m, meta) = gbt::fit(ds, &p, spec.seed)?;
            (ModelParams::Gbt(m), meta)
        }
        LearnerKind::RandomForest => {
            let p = forest::ForestParams::from_spec(spec)?;
            let (m, meta) = forest::fit(ds, &p, spec.seed)?;
            (ModelParams::Forest(m), meta)
        }
        LearnerKind::LinearSvm => {
            if classes < 2 {
                return Err(TrainError::SingleClassDataset("svm"));
            }
            let p = svm::SvmParams::from_spec(spec)?;
            let (m, meta) = svm::fit(ds, &p, spec.seed)?;
            (ModelParams::Linear(m), meta)
        }
        LearnerKind::Mlp => {
            if classes < 2 {
                return Err(TrainError::SingleClassDataset("mlp"));
            }
            let p = mlp::MlpParams::from_spec(spec)?;
            let (m, meta) = mlp::fit(ds, &p, spec.seed)?;
            (ModelParams::Mlp(m), meta)
        }
    };
    Ok(TrainedModel {
        kind: spec.kind,
        class_names: Disposition::ALL.iter().map(|d| d.as_str().to_string()).collect(),
        n_features: ds.n_features(),
        params,
        training_meta: meta,
    })
}

impl TrainedModel {
    /// Class probabilities for one vector; components sum to 1.
    pub fn predict_proba(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        match &self.params {
            ModelParams::Gbt(m) => m.predict_proba(v),
            ModelParams::Forest(m) => m.predict_proba(v),
            ModelParams::Linear(m) => m.predict_proba(v),
            ModelParams::Mlp(m) => m.predict_proba(v),
        }
    }

    /// Predicted disposition (argmax of probabilities).
    pub fn predict(&self, v: &FeatureVector) -> Disposition {
        Disposition::from_index(argmax(&self.predict_proba(v))).expect("3 classes")
    }

    /// Structural validity: feature indices in range, child links forward.
    pub fn check_integrity(&self) -> Result<(), String> {
        if self.class_names.len() != N_CLASSES {
            return Err(format!("expected {N_CLASSES} class names"));
        }
        match &self.params {
            ModelParams::Gbt(m) => m.check_integrity(self.n_features),
            ModelParams::Forest(m) => m.check_integrity(self.n_features),
            ModelParams::Linear(m) => m.check_integrity(self.n_features),
            ModelParams::Mlp(m) => m.check_integrity(self.n_features),
        }
    }
}
