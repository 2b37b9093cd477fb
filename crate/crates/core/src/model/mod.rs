//! Pure model layer.
//!
//! Nothing in here mutates shared state: every function maps its inputs to a
//! fresh output, so the service can fold events and replay them bit-for-bit.

mod anonymize;
mod classifier;
mod examples;
mod features;
mod reputation;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use anonymize::{anonymize_user, AnonKey};
pub use classifier::{
    gradient, loss, predict_toxicity, sigmoid, train_update, training_loss, EmbeddingVector,
    Gradient, ModelParams, PROB_EPS,
};
pub use examples::{make_prediction_example, make_training_example, Prediction, TrainingExample};
pub use features::{extract_features, tokenize, FeatureLayout, FeatureVector};
pub use reputation::{update_reputation, ReputationRecord};

use crate::types::{FlagEvent, MessageId, MessageRecord, UserRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub learning_rate: f64,
    pub hash_buckets: usize,
    /// Initial magnitude of the embedding-block weights. Embeddings start at
    /// zero, so with a zero block the pair would sit at a saddle forever.
    pub embedding_weight_init: f64,
    /// Also score a message when an acceptable flag arrives.
    pub rescore_on_acceptable: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 8,
            learning_rate: 0.1,
            hash_buckets: 4096,
            embedding_weight_init: 0.01,
            rescore_on_acceptable: false,
        }
    }
}

impl ModelConfig {
    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(self.embedding_dim, self.hash_buckets)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.hash_buckets == 0 {
            return Err(crate::Error::Config("hash_buckets must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(crate::Error::Config(
                "learning_rate must be a positive finite number".into(),
            ));
        }
        if !self.embedding_weight_init.is_finite() {
            return Err(crate::Error::Config(
                "embedding_weight_init must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Read access to the platform state the example builders need.
pub trait ModerationView {
    fn message(&self, id: MessageId) -> Option<&MessageRecord>;
    /// Effective flags on a message, one per flagger, in flagger order.
    fn effective_flags(&self, id: MessageId) -> Vec<FlagEvent>;
    fn has_editorial(&self, id: MessageId) -> bool;
    fn reputations(&self) -> &BTreeMap<UserRef, ReputationRecord>;
    fn params(&self) -> &ModelParams;
    fn model_config(&self) -> &ModelConfig;
}
