//! Single-hidden-layer network: ReLU hidden units, softmax output,
//! cross-entropy loss, mini-batch gradient descent on a fixed schedule.
//!
//! `loss` / `loss_and_grad` expose the training objective and its analytic
//! gradient so the backward pass can be checked against finite differences.

use serde::{Deserialize, Serialize};

use super::{
    parse_hyper, reject_unknown_keys, softmax, LearnerSpec, TrainError, TrainingMeta, N_CLASSES,
};
use crate::rng::DetRng;
use crate::vectorizer::{Dataset, FeatureVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl MlpParams {
    pub fn from_spec(spec: &LearnerSpec) -> Result<Self, TrainError> {
        reject_unknown_keys(
            &spec.hyper,
            "mlp",
            &["hidden", "learning_rate", "epochs", "batch"],
        )?;
        let params = MlpParams {
            hidden: parse_hyper(&spec.hyper, "hidden", 64)?,
            learning_rate: parse_hyper(&spec.hyper, "learning_rate", 0.05)?,
            epochs: parse_hyper(&spec.hyper, "epochs", 200)?,
            batch: parse_hyper(&spec.hyper, "batch", 32)?,
        };
        if params.hidden == 0 || params.batch == 0 {
            return Err(TrainError::BadHyperValue {
                key: "hidden/batch".into(),
                value: "0".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(params)
    }
}

/// Network weights: `w1` is hidden x features, `w2` is classes x hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

impl MlpModel {
    /// Fresh network with fan-in-scaled uniform weights drawn from `seed`.
    pub fn new_seeded(n_features: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = DetRng::with_stream(seed, 0);
        // uniform init scaled by fan-in
        let a1 = 1.0 / (n_features.max(1) as f64).sqrt();
        let w1 = (0..hidden)
            .map(|_| (0..n_features).map(|_| (2.0 * rng.next_f64() - 1.0) * a1).collect())
            .collect();
        let a2 = 1.0 / (hidden as f64).sqrt();
        let w2 = (0..N_CLASSES)
            .map(|_| (0..hidden).map(|_| (2.0 * rng.next_f64() - 1.0) * a2).collect())
            .collect();
        MlpModel {
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; N_CLASSES],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.b1.len()
    }

    /// Hidden pre-activations for a sparse input.
    fn pre_hidden(&self, v: &FeatureVector) -> Vec<f64> {
        let mut pre = self.b1.clone();
        for (j, row) in self.w1.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, x) in &v.entries {
                acc += row[i] * x;
            }
            pre[j] += acc;
        }
        pre
    }

    /// Pre-softmax class scores (logits).
    pub fn logits(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        let hidden: Vec<f64> = self.pre_hidden(v).iter().map(|&p| p.max(0.0)).collect();
        std::array::from_fn(|k| {
            self.w2[k]
                .iter()
                .zip(&hidden)
                .map(|(w, h)| w * h)
                .sum::<f64>()
                + self.b2[k]
        })
    }

    pub fn predict_proba(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        softmax(&self.logits(v))
    }

    /// Gradient of the predicted-class logit with respect to the input,
    /// restricted to the input's nonzero coordinates.
    pub fn input_gradient(&self, v: &FeatureVector, class: usize) -> Vec<(usize, f64)> {
        let pre = self.pre_hidden(v);
        let mut out = Vec::with_capacity(v.entries.len());
        for &(i, _) in &v.entries {
            let mut g = 0.0;
            for (j, &p) in pre.iter().enumerate() {
                if p > 0.0 {
                    g += self.w2[class][j] * self.w1[j][i];
                }
            }
            out.push((i, g));
        }
        out
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, xs: &[&FeatureVector], ys: &[usize]) -> f64 {
        let n = xs.len() as f64;
        xs.iter()
            .zip(ys)
            .map(|(v, &y)| {
                let p = self.predict_proba(v);
                -(p[y].max(1e-300)).ln()
            })
            .sum::<f64>()
            / n
    }

    /// Mean cross-entropy and its analytic gradient over a batch.
    pub fn loss_and_grad(&self, xs: &[&FeatureVector], ys: &[usize]) -> (f64, MlpGrad) {
        let n_features = self.w1.first().map_or(0, |r| r.len());
        let hidden = self.hidden_size();
        let scale = 1.0 / xs.len() as f64;
        let mut grad = MlpGrad {
            w1: vec![vec![0.0; n_features]; hidden],
            b1: vec![0.0; hidden],
            w2: vec![vec![0.0; hidden]; N_CLASSES],
            b2: vec![0.0; N_CLASSES],
        };
        let mut loss = 0.0;
        for (v, &y) in xs.iter().zip(ys) {
            let pre = self.pre_hidden(v);
            let h: Vec<f64> = pre.iter().map(|&p| p.max(0.0)).collect();
            let logits: [f64; N_CLASSES] = std::array::from_fn(|k| {
                self.w2[k].iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>() + self.b2[k]
            });
            let p = softmax(&logits);
            loss += -(p[y].max(1e-300)).ln() * scale;
            // dL/dz_k = (p_k - 1[k==y]) / n
            let dz: [f64; N_CLASSES] =
                std::array::from_fn(|k| (p[k] - ((k == y) as usize as f64)) * scale);
            for (k, &dzk) in dz.iter().enumerate() {
                grad.b2[k] += dzk;
                for (j, &hj) in h.iter().enumerate() {
                    grad.w2[k][j] += dzk * hj;
                }
            }
            for (j, &prej) in pre.iter().enumerate() {
                if prej <= 0.0 {
                    continue;
                }
                let dh: f64 = dz
                    .iter()
                    .zip(&self.w2)
                    .map(|(&dzk, row)| dzk * row[j])
                    .sum();
                grad.b1[j] += dh;
                for &(i, x) in &v.entries {
                    grad.w1[j][i] += dh * x;
                }
            }
        }
        (loss, grad)
    }

    fn apply(&mut self, grad: &MlpGrad, lr: f64) {
        for (row, grow) in self.w1.iter_mut().zip(&grad.w1) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w -= lr * g;
            }
        }
        for (b, g) in self.b1.iter_mut().zip(&grad.b1) {
            *b -= lr * g;
        }
        for (row, grow) in self.w2.iter_mut().zip(&grad.w2) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w -= lr * g;
            }
        }
        for (b, g) in self.b2.iter_mut().zip(&grad.b2) {
            *b -= lr * g;
        }
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        let n_features = self.w1.first().map_or(0, |r| r.len());
        let hidden = self.hidden_size();
        hidden * n_features + hidden + N_CLASSES * hidden + N_CLASSES
    }

    /// Read one parameter by flat index (w1 row-major, b1, w2, b2).
    pub fn get_param(&self, index: usize) -> f64 {
        self.locate(index, |v| *v)
    }

    /// Write one parameter by flat index.
    pub fn set_param(&mut self, index: usize, value: f64) {
        let n_features = self.w1.first().map_or(0, |r| r.len());
        let hidden = self.hidden_size();
        let mut i = index;
        if i < hidden * n_features {
            self.w1[i / n_features][i % n_features] = value;
            return;
        }
        i -= hidden * n_features;
        if i < hidden {
            self.b1[i] = value;
            return;
        }
        i -= hidden;
        if i < N_CLASSES * hidden {
            self.w2[i / hidden][i % hidden] = value;
            return;
        }
        i -= N_CLASSES * hidden;
        self.b2[i] = value;
    }

    fn locate<T>(&self, index: usize, read: impl Fn(&f64) -> T) -> T {
        let n_features = self.w1.first().map_or(0, |r| r.len());
        let hidden = self.hidden_size();
        let mut i = index;
        if i < hidden * n_features {
            return read(&self.w1[i / n_features][i % n_features]);
        }
        i -= hidden * n_features;
        if i < hidden {
            return read(&self.b1[i]);
        }
        i -= hidden;
        if i < N_CLASSES * hidden {
            return read(&self.w2[i / hidden][i % hidden]);
        }
        i -= N_CLASSES * hidden;
        read(&self.b2[i])
    }

    pub(crate) fn check_integrity(&self, n_features: usize) -> Result<(), String> {
        let hidden = self.hidden_size();
        if self.w1.len() != hidden {
            return Err("w1 row count must match hidden size".into());
        }
        for row in &self.w1 {
            if row.len() != n_features {
                return Err("w1 width must match vocabulary size".into());
            }
        }
        if self.w2.len() != N_CLASSES || self.b2.len() != N_CLASSES {
            return Err("output layer must have one row per class".into());
        }
        for row in &self.w2 {
            if row.len() != hidden {
                return Err("w2 width must match hidden size".into());
            }
        }
        Ok(())
    }
}

impl MlpGrad {
    /// Read one gradient component by flat index (same layout as params).
    pub fn get(&self, index: usize) -> f64 {
        let n_features = self.w1.first().map_or(0, |r| r.len());
        let hidden = self.b1.len();
        let mut i = index;
        if i < hidden * n_features {
            return self.w1[i / n_features][i % n_features];
        }
        i -= hidden * n_features;
        if i < hidden {
            return self.b1[i];
        }
        i -= hidden;
        if i < N_CLASSES * hidden {
            return self.w2[i / hidden][i % hidden];
        }
        i -= N_CLASSES * hidden;
        self.b2[i]
    }
}

pub(crate) fn fit(
    ds: &Dataset,
    params: &MlpParams,
    seed: u64,
) -> Result<(MlpModel, TrainingMeta), TrainError> {
    let order = super::canonical_order(ds);
    let vectors: Vec<&FeatureVector> = order.iter().map(|&i| &ds.vectors[i]).collect();
    let targets: Vec<usize> = order.iter().map(|&i| ds.labels[i].index()).collect();
    let n = vectors.len();

    let mut model = MlpModel::new_seeded(ds.n_features(), params.hidden, seed);
    let mut loss_curve = vec![model.loss(&vectors, &targets)];

    for epoch in 0..params.epochs {
        let mut visit: Vec<usize> = (0..n).collect();
        DetRng::with_stream(seed, 1 + epoch as u64).shuffle(&mut visit);
        for chunk in visit.chunks(params.batch) {
            let xs: Vec<&FeatureVector> = chunk.iter().map(|&s| vectors[s]).collect();
            let ys: Vec<usize> = chunk.iter().map(|&s| targets[s]).collect();
            let (_, grad) = model.loss_and_grad(&xs, &ys);
            model.apply(&grad, params.learning_rate);
        }
        let loss = model.loss(&vectors, &targets);
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                kind: "mlp",
                round: epoch,
            });
        }
        loss_curve.push(loss);
    }

    let final_loss = *loss_curve.last().expect("nonempty curve");
    Ok((
        model,
        TrainingMeta {
            rounds_run: params.epochs,
            final_training_loss: final_loss,
            loss_curve,
        },
    ))
}
