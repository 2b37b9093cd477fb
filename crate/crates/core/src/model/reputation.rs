use crate::types::{UserRef, Verdict};

/// Agreement between a user's flags and editorial outcomes.
///
/// Reliability is the add-one smoothed agreement rate, so a fresh user sits at
/// 0.5 and the value never reaches 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReputationRecord {
    pub user: UserRef,
    pub agree_count: u64,
    pub disagree_count: u64,
}

impl ReputationRecord {
    pub fn new(user: UserRef) -> Self {
        Self {
            user,
            agree_count: 0,
            disagree_count: 0,
        }
    }

    pub fn reliability(&self) -> f64 {
        (self.agree_count as f64 + 1.0) / ((self.agree_count + self.disagree_count) as f64 + 2.0)
    }
}

pub fn update_reputation(
    rep: ReputationRecord,
    flag_verdict: Verdict,
    gold: Verdict,
) -> ReputationRecord {
    let mut next = rep;
    if flag_verdict == gold {
        next.agree_count += 1;
    } else {
        next.disagree_count += 1;
    }
    next
}
