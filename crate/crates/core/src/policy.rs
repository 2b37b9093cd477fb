//! Takedown rule and review-queue ordering.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::Prediction;
use crate::types::{EditorialLabel, FlagEvent, MessageId, MessageRecord, Seq, Verdict};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueMode {
    /// Order by number of toxic flags.
    Primitive,
    /// Order by latest model probability.
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub threshold: f64,
    pub min_flags_for_queue: usize,
    pub queue_mode: QueueMode,
    pub auto_remove_enabled: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            threshold: 0.95,
            min_flags_for_queue: 1,
            queue_mode: QueueMode::Learned,
            auto_remove_enabled: true,
        }
    }
}

impl PolicyConfig {
    /// Flag-count queue with no automatic removals.
    pub fn primitive() -> Self {
        Self {
            queue_mode: QueueMode::Primitive,
            auto_remove_enabled: false,
            ..Self::default()
        }
    }

    pub fn learned() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0.5, 1), got {}",
                self.threshold
            )));
        }
        if self.min_flags_for_queue < 1 {
            return Err(Error::Config(
                "min_flags_for_queue must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Remove,
    Keep,
    NeedsReview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecisionBasis {
    EditorialToxic,
    EditorialAcceptable,
    ModelAboveThreshold,
    InsufficientEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub outcome: Outcome,
    pub basis: DecisionBasis,
}

impl Decision {
    const fn new(outcome: Outcome, basis: DecisionBasis) -> Self {
        Self { outcome, basis }
    }
}

/// The takedown rule.
///
/// The hub's label always wins. Without one, a message is removed only by a
/// prediction from a model that has seen at least one editorial label and
/// whose probability reaches the threshold. `toxic_flags` is the current
/// number of effective toxic flags on the message.
pub fn decide(
    message: &MessageRecord,
    editorial: Option<&EditorialLabel>,
    latest: Option<&Prediction>,
    toxic_flags: usize,
    cfg: &PolicyConfig,
) -> Decision {
    use DecisionBasis::*;
    use Outcome::*;

    if let Some(label) = editorial {
        return match label.verdict {
            Verdict::Toxic => Decision::new(Remove, EditorialToxic),
            Verdict::Acceptable => Decision::new(Keep, EditorialAcceptable),
        };
    }
    let trained_above = latest.is_some_and(|p| {
        p.message_id == message.message_id && p.model_version >= 1 && p.probability >= cfg.threshold
    });
    if cfg.auto_remove_enabled && trained_above {
        return Decision::new(Remove, ModelAboveThreshold);
    }
    if toxic_flags >= cfg.min_flags_for_queue {
        Decision::new(NeedsReview, InsufficientEvidence)
    } else {
        Decision::new(Keep, InsufficientEvidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewQueueEntry {
    pub message_id: MessageId,
    pub toxic_flag_count: usize,
    pub latest_model_probability: Option<f64>,
    pub first_flag_seq: Seq,
}

/// Queue entry for a message, if it belongs in the queue: not terminal, not
/// yet adjudicated, and carrying enough toxic flags. `first_flag_seq` is the
/// seq of the first toxic flag the message ever received.
pub fn queue_membership(
    message: &MessageRecord,
    flags: &[FlagEvent],
    has_editorial: bool,
    latest: Option<&Prediction>,
    first_flag_seq: Option<Seq>,
    cfg: &PolicyConfig,
) -> Option<ReviewQueueEntry> {
    if message.status.is_terminal() || has_editorial {
        return None;
    }
    let toxic = flags.iter().filter(|f| f.verdict == Verdict::Toxic).count();
    if toxic < cfg.min_flags_for_queue {
        return None;
    }
    let first_flag_seq = first_flag_seq.or_else(|| {
        flags
            .iter()
            .filter(|f| f.verdict == Verdict::Toxic)
            .map(|f| f.seq)
            .min()
    })?;
    Some(ReviewQueueEntry {
        message_id: message.message_id,
        toxic_flag_count: toxic,
        latest_model_probability: latest.map(|p| p.probability),
        first_flag_seq,
    })
}

fn tie_break(a: &ReviewQueueEntry, b: &ReviewQueueEntry) -> Ordering {
    a.first_flag_seq
        .cmp(&b.first_flag_seq)
        .then(a.message_id.cmp(&b.message_id))
}

/// Comparator for [`prioritize_queue`]; `Less` means reviewed earlier.
pub fn queue_order(mode: QueueMode, a: &ReviewQueueEntry, b: &ReviewQueueEntry) -> Ordering {
    let primary = match mode {
        QueueMode::Primitive => b.toxic_flag_count.cmp(&a.toxic_flag_count),
        QueueMode::Learned => {
            let pa = a.latest_model_probability.unwrap_or(0.5);
            let pb = b.latest_model_probability.unwrap_or(0.5);
            pb.total_cmp(&pa)
        }
    };
    primary.then_with(|| tie_break(a, b))
}

pub fn prioritize_queue(
    mut entries: Vec<ReviewQueueEntry>,
    mode: QueueMode,
) -> Vec<ReviewQueueEntry> {
    entries.sort_by(|a, b| queue_order(mode, a, b));
    entries
}
