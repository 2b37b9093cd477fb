//! Online logistic regression with jointly trained per-user embeddings.

use std::collections::BTreeMap;

use super::{FeatureLayout, FeatureVector, ModelConfig, TrainingExample};
use crate::types::UserRef;
use crate::{Error, Result};

/// Probabilities are kept inside `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layout: FeatureLayout,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub embeddings: BTreeMap<UserRef, EmbeddingVector>,
    /// Number of training steps applied so far.
    pub version: u64,
}

impl ModelParams {
    /// All-zero parameters; predicts 0.5 for every input.
    pub fn zeros(layout: FeatureLayout) -> Self {
        Self {
            layout,
            weights: vec![0.0; layout.dim()],
            bias: 0.0,
            embeddings: BTreeMap::new(),
            version: 0,
        }
    }

    /// Untrained parameters for a fresh platform. The embedding-block weights
    /// get a small alternating-sign start so embedding gradients are nonzero.
    pub fn initial(cfg: &ModelConfig) -> Self {
        let mut params = Self::zeros(cfg.layout());
        let range = params.layout.embedding_range();
        for (k, w) in params.weights[range].iter_mut().enumerate() {
            *w = if k % 2 == 0 {
                cfg.embedding_weight_init
            } else {
                -cfg.embedding_weight_init
            };
        }
        params
    }

    pub fn embedding(&self, user: UserRef) -> Option<&EmbeddingVector> {
        self.embeddings.get(&user)
    }

    fn check_dim(&self, features: &FeatureVector) -> Result<()> {
        if features.len() != self.weights.len() {
            return Err(Error::ContractViolation(format!(
                "feature dimension {} does not match model dimension {}",
                features.len(),
                self.weights.len()
            )));
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.bias.is_finite()
            && self.weights.iter().all(|w| w.is_finite())
            && self
                .embeddings
                .values()
                .all(|e| e.0.iter().all(|v| v.is_finite()))
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

// Index-order accumulation keeps replay bit-stable.
fn pre_activation(params: &ModelParams, x: &[f64]) -> f64 {
    let mut z = 0.0;
    for (w, v) in params.weights.iter().zip(x) {
        z += w * v;
    }
    z + params.bias
}

pub fn predict_toxicity(params: &ModelParams, features: &FeatureVector) -> Result<f64> {
    params.check_dim(features)?;
    Ok(clamp_prob(sigmoid(pre_activation(params, &features.0))))
}

/// Negative log-likelihood of `gold` under `probability`.
pub fn loss(probability: f64, gold: crate::Verdict) -> f64 {
    match gold {
        crate::Verdict::Toxic => -clamp_prob(probability).ln(),
        crate::Verdict::Acceptable => -clamp_prob(1.0 - probability).ln(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub embeddings: BTreeMap<UserRef, Vec<f64>>,
}

/// Embedding block of a training example: the mean of the toxic flaggers'
/// *current* embeddings, since those embeddings are parameters of the model.
fn embedding_block(params: &ModelParams, example: &TrainingExample) -> Result<Vec<f64>> {
    params.check_dim(&example.features)?;
    let dim = params.layout.embedding_dim;
    let mut block = vec![0.0; dim];
    if !example.toxic_flaggers.is_empty() {
        for u in &example.toxic_flaggers {
            if let Some(e) = params.embeddings.get(u) {
                if e.0.len() != dim {
                    return Err(Error::ContractViolation(format!(
                        "embedding for {u} has wrong dimension"
                    )));
                }
                for (slot, v) in block.iter_mut().zip(&e.0) {
                    *slot += v;
                }
            }
        }
        let n = example.toxic_flaggers.len() as f64;
        block.iter_mut().for_each(|v| *v /= n);
    }
    Ok(block)
}

/// Model input for a training example: the frozen snapshot with the
/// embedding block replaced by [`embedding_block`].
pub(crate) fn example_input(params: &ModelParams, example: &TrainingExample) -> Result<Vec<f64>> {
    let block = embedding_block(params, example)?;
    let mut x = example.features.0.clone();
    x[params.layout.embedding_range()].copy_from_slice(&block);
    Ok(x)
}

/// Loss of the current parameters on a training example.
pub fn training_loss(params: &ModelParams, example: &TrainingExample) -> Result<f64> {
    let block = embedding_block(params, example)?;
    let range = params.layout.embedding_range();
    let (w, x) = (&params.weights, &example.features.0);
    let mut z = 0.0;
    for (w, v) in w[..range.start].iter().zip(&x[..range.start]) {
        z += w * v;
    }
    for (w, v) in w[range.clone()].iter().zip(&block) {
        z += w * v;
    }
    for (w, v) in w[range.end..].iter().zip(&x[range.end..]) {
        z += w * v;
    }
    Ok(loss(sigmoid(z + params.bias), example.gold))
}

/// Gradient of `loss(predict(params, x), gold)` with respect to the weights,
/// the bias and each toxic flagger's embedding.
pub fn gradient(params: &ModelParams, example: &TrainingExample) -> Result<Gradient> {
    let x = example_input(params, example)?;
    let p = clamp_prob(sigmoid(pre_activation(params, &x)));
    let residual = p - example.gold.target();

    let weights = x.iter().map(|v| residual * v).collect();
    let mut embeddings = BTreeMap::new();
    if !example.toxic_flaggers.is_empty() {
        let n = example.toxic_flaggers.len() as f64;
        let block = &params.weights[params.layout.embedding_range()];
        let g: Vec<f64> = block.iter().map(|w| residual * w / n).collect();
        for u in &example.toxic_flaggers {
            embeddings.insert(*u, g.clone());
        }
    }
    Ok(Gradient {
        weights,
        bias: residual,
        embeddings,
    })
}

/// One SGD step. Only the weights, the bias, and the embeddings of the
/// example's toxic flaggers change.
pub fn train_update(
    params: &ModelParams,
    example: &TrainingExample,
    learning_rate: f64,
) -> Result<ModelParams> {
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::ContractViolation(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    let grad = gradient(params, example)?;
    let mut next = params.clone();
    for (w, g) in next.weights.iter_mut().zip(&grad.weights) {
        *w -= learning_rate * g;
    }
    next.bias -= learning_rate * grad.bias;
    let dim = params.layout.embedding_dim;
    for (user, g) in &grad.embeddings {
        let e = next
            .embeddings
            .entry(*user)
            .or_insert_with(|| EmbeddingVector::zeros(dim));
        for (v, gv) in e.0.iter_mut().zip(g) {
            *v -= learning_rate * gv;
        }
    }
    next.version += 1;
    if !next.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite parameters after step {}",
            next.version
        )));
    }
    Ok(next)
}
