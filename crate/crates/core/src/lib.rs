//! Hub-and-spoke content moderation.
//!
//! Users (spokes) flag public messages; those flags are features. The
//! editorial team (hub) supplies gold labels, each of which trains an online
//! logistic model. A message is taken down only when the hub marks it toxic or
//! the trained model predicts toxicity above a configured threshold.
//!
//! * [`model`] - pure model layer: anonymization, features, classifier, reputation.
//! * [`policy`] - takedown rule and review-queue ordering.
//! * [`service`] - event-sourced platform state, JSONL log, replay and hashing.
//! * [`sim`] - seeded simulation of a user population and an editorial agent.

pub mod error;
pub mod model;
pub mod policy;
pub mod service;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use model::{
    anonymize_user, extract_features, gradient, loss, make_prediction_example,
    make_training_example, predict_toxicity, train_update, training_loss, update_reputation,
    AnonKey, EmbeddingVector, FeatureLayout, FeatureVector, Gradient, ModelConfig, ModelParams,
    ModerationView, Prediction, ReputationRecord, TrainingExample,
};
pub use policy::{
    decide, prioritize_queue, queue_membership, Decision, DecisionBasis, Outcome, PolicyConfig,
    QueueMode, ReviewQueueEntry,
};
pub use service::{
    replay_log, state_hash, Applied, Event, EventBody, EventLog, MetricsSnapshot, PlatformState,
    Service, ServiceConfig, StateHash,
};
pub use types::{
    EditorialLabel, FlagEvent, MessageId, MessageRecord, MessageStatus, Seq, UserRef, Verdict,
};
