use serde::{Deserialize, Serialize};

use crate::policy::PolicyConfig;

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Outcome counts at one point of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Tally {
    pub messages: usize,
    pub toxic: usize,
    pub auto_removed: usize,
    pub auto_removed_toxic: usize,
    pub removed: usize,
    pub removed_toxic: usize,
    pub labels_used: usize,
    pub manual_review: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub precision_auto: Option<f64>,
    pub recall_auto: Option<f64>,
    pub precision_all: Option<f64>,
    pub recall_all: Option<f64>,
    pub editorial_labels_used: usize,
    pub editorial_labels_per_true_takedown: Option<f64>,
    pub review_fraction: Option<f64>,
    pub model_version: u64,
}

impl RoundMetrics {
    pub(crate) fn from_tally(round: usize, t: &Tally, model_version: u64) -> Self {
        Self {
            round,
            precision_auto: ratio(t.auto_removed_toxic, t.auto_removed),
            recall_auto: ratio(t.auto_removed_toxic, t.toxic),
            precision_all: ratio(t.removed_toxic, t.removed),
            recall_all: ratio(t.removed_toxic, t.toxic),
            editorial_labels_used: t.labels_used,
            editorial_labels_per_true_takedown: ratio(t.labels_used, t.removed_toxic),
            review_fraction: ratio(t.manual_review, t.messages),
            model_version,
        }
    }
}

/// Result of one simulated run. All rates are `null` when their denominator is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    /// Always "synthetic": scenario parameters are invented, not measured.
    pub data: String,
    pub seed: u64,
    pub policy: PolicyConfig,
    pub messages: usize,
    pub toxic_messages: usize,
    pub auto_removed: usize,
    pub auto_removed_toxic: usize,
    pub removed: usize,
    pub removed_toxic: usize,
    /// Precision over model removals.
    pub precision_auto: Option<f64>,
    pub recall_auto: Option<f64>,
    /// Precision over every removal, editorial or model.
    pub precision_all: Option<f64>,
    pub recall_all: Option<f64>,
    pub editorial_labels_used: usize,
    pub editorial_labels_per_true_takedown: Option<f64>,
    /// Share of messages that needed a human: labelled, or still queued at the end.
    pub review_fraction: Option<f64>,
    /// Mean reliability per cohort (users without a record count at 0.5).
    pub cohort_mean_reliability: Vec<f64>,
    pub model_version: u64,
    pub rounds: Vec<RoundMetrics>,
    /// SHA-256 over the ids of ground-truth toxic messages.
    pub ground_truth_digest: String,
    pub state_hash: String,
}

impl SimMetrics {
    pub(crate) fn fill(&mut self, t: &Tally) {
        self.messages = t.messages;
        self.toxic_messages = t.toxic;
        self.auto_removed = t.auto_removed;
        self.auto_removed_toxic = t.auto_removed_toxic;
        self.removed = t.removed;
        self.removed_toxic = t.removed_toxic;
        self.precision_auto = ratio(t.auto_removed_toxic, t.auto_removed);
        self.recall_auto = ratio(t.auto_removed_toxic, t.toxic);
        self.precision_all = ratio(t.removed_toxic, t.removed);
        self.recall_all = ratio(t.removed_toxic, t.toxic);
        self.editorial_labels_used = t.labels_used;
        self.editorial_labels_per_true_takedown = ratio(t.labels_used, t.removed_toxic);
        self.review_fraction = ratio(t.manual_review, t.messages);
    }
}
