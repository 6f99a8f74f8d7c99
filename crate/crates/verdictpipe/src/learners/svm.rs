//! One-vs-rest linear SVM trained with Pegasos-style stochastic
//! subgradient descent on the hinge loss.
//!
//! The multiclass decision is the argmax margin; reported probabilities
//! are a softmax over margins and carry no calibration.

use serde::{Deserialize, Serialize};

use super::{
    parse_hyper, reject_unknown_keys, softmax, LearnerSpec, TrainError, TrainingMeta, N_CLASSES,
};
use crate::rng::DetRng;
use crate::vectorizer::{Dataset, FeatureVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl SvmParams {
    pub fn from_spec(spec: &LearnerSpec) -> Result<Self, TrainError> {
        reject_unknown_keys(&spec.hyper, "svm", &["lambda", "epochs"])?;
        Ok(SvmParams {
            lambda: parse_hyper(&spec.hyper, "lambda", 1e-4)?,
            epochs: parse_hyper(&spec.hyper, "epochs", 50)?,
        })
    }
}

/// One-vs-rest weight matrix and biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// One weight vector per class, dense over the vocabulary.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn margins(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        std::array::from_fn(|k| {
            let w = &self.weights[k];
            let dot: f64 = v.entries.iter().map(|&(i, x)| w[i] * x).sum();
            dot + self.bias[k]
        })
    }

    pub fn predict_proba(&self, v: &FeatureVector) -> [f64; N_CLASSES] {
        softmax(&self.margins(v))
    }

    pub(crate) fn check_integrity(&self, n_features: usize) -> Result<(), String> {
        if self.weights.len() != N_CLASSES || self.bias.len() != N_CLASSES {
            return Err("linear model must have one weight vector per class".into());
        }
        for w in &self.weights {
            if w.len() != n_features {
                return Err(format!(
                    "weight vector length {} does not match vocabulary size {n_features}",
                    w.len()
                ));
            }
        }
        Ok(())
    }
}

fn hinge_objective(
    weights: &[Vec<f64>],
    bias: &[f64],
    lambda: f64,
    vectors: &[&FeatureVector],
    targets: &[usize],
) -> f64 {
    let n = vectors.len() as f64;
    let mut total = 0.0;
    for k in 0..N_CLASSES {
        let w = &weights[k];
        let sq_norm = w.iter().map(|x| x * x).sum::<f64>() + bias[k] * bias[k];
        let reg = 0.5 * lambda * sq_norm;
        let hinge: f64 = vectors
            .iter()
            .zip(targets)
            .map(|(v, &y)| {
                let sign = if y == k { 1.0 } else { -1.0 };
                let margin: f64 =
                    v.entries.iter().map(|&(i, x)| w[i] * x).sum::<f64>() + bias[k];
                (1.0 - sign * margin).max(0.0)
            })
            .sum();
        total += reg + hinge / n;
    }
    total / N_CLASSES as f64
}

pub(crate) fn fit(
    ds: &Dataset,
    params: &SvmParams,
    seed: u64,
) -> Result<(LinearModel, TrainingMeta), TrainError> {
    let order = super::canonical_order(ds);
    let vectors: Vec<&FeatureVector> = order.iter().map(|&i| &ds.vectors[i]).collect();
    let targets: Vec<usize> = order.iter().map(|&i| ds.labels[i].index()).collect();
    let n = vectors.len();
    let n_features = ds.n_features();

    let mut weights = vec![vec![0.0f64; n_features]; N_CLASSES];
    let mut bias = vec![0.0f64; N_CLASSES];
    let mut step = 0u64;
    let mut loss_curve = vec![hinge_objective(
        &weights, &bias, params.lambda, &vectors, &targets,
    )];

    for epoch in 0..params.epochs {
        let mut visit: Vec<usize> = (0..n).collect();
        DetRng::with_stream(seed, epoch as u64).shuffle(&mut visit);
        for &s in &visit {
            step += 1;
            let eta = 1.0 / (params.lambda * step as f64);
            let decay = 1.0 - 1.0 / step as f64;
            let v = vectors[s];
            for k in 0..N_CLASSES {
                let sign = if targets[s] == k { 1.0 } else { -1.0 };
                let w = &mut weights[k];
                let margin: f64 =
                    v.entries.iter().map(|&(i, x)| w[i] * x).sum::<f64>() + bias[k];
                // the bias is a regularized weight on a constant feature,
                // so the Pegasos decay keeps it bounded too
                for x in w.iter_mut() {
                    *x *= decay;
                }
                bias[k] *= decay;
                if sign * margin < 1.0 {
                    for &(i, x) in &v.entries {
                        w[i] += eta * sign * x;
                    }
                    bias[k] += eta * sign;
                }
            }
        }
        let loss = hinge_objective(&weights, &bias, params.lambda, &vectors, &targets);
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                kind: "svm",
                round: epoch,
            });
        }
        loss_curve.push(loss);
    }

    let final_loss = *loss_curve.last().expect("nonempty curve");
    Ok((
        LinearModel { weights, bias },
        TrainingMeta {
            rounds_run: params.epochs,
            final_training_loss: final_loss,
            loss_curve,
        },
    ))
}
