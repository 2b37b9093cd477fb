use serde::{Deserialize, Serialize};

use super::state::PlatformState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removals {
    pub editorial_toxic: u64,
    pub model_above_threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub last_seq: u64,
    pub messages: u64,
    pub flags: u64,
    pub ignored_flags: u64,
    pub editorial_labels: u64,
    pub predictions: u64,
    pub removals: Removals,
    pub restorations: u64,
    /// Editorial labels spent per removal; `null` before the first removal.
    pub editorial_labels_per_removal: Option<f64>,
    pub queue_length: usize,
    pub model_version: u64,
}

impl MetricsSnapshot {
    pub fn of(state: &PlatformState) -> Self {
        let c = state.counters();
        let removed = c.removals_editorial + c.removals_model;
        Self {
            last_seq: state.last_seq(),
            messages: c.messages,
            flags: c.flags,
            ignored_flags: c.ignored_flags,
            editorial_labels: c.editorial_labels,
            predictions: c.predictions,
            removals: Removals {
                editorial_toxic: c.removals_editorial,
                model_above_threshold: c.removals_model,
            },
            restorations: c.restorations,
            editorial_labels_per_removal: (removed > 0)
                .then(|| c.editorial_labels as f64 / removed as f64),
            queue_length: state.review_queue().len(),
            model_version: state.model_version(),
        }
    }

    /// Monotone counters in a fixed order, for nondecreasing checks.
    pub fn counters(&self) -> [u64; 9] {
        [
            self.messages,
            self.flags,
            self.ignored_flags,
            self.editorial_labels,
            self.predictions,
            self.removals.editorial_toxic,
            self.removals.model_above_threshold,
            self.restorations,
            self.model_version,
        ]
    }
}
