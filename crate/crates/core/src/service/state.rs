//! Platform state as a fold over the event log.

use std::collections::BTreeMap;

use super::event::{Event, EventBody};
use crate::model::{
    make_prediction_example, make_training_example, train_update, update_reputation, ModelConfig,
    ModelParams, ModerationView, Prediction, ReputationRecord,
};
use crate::policy::{
    decide, prioritize_queue, queue_membership, Decision, DecisionBasis, Outcome, PolicyConfig,
    ReviewQueueEntry,
};
use crate::types::{
    EditorialLabel, FlagEvent, MessageId, MessageRecord, MessageStatus, Seq, UserRef, Verdict,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub record: MessageRecord,
    /// Effective flags, latest per flagger.
    pub flags: BTreeMap<UserRef, FlagEvent>,
    pub first_flag_seq: Option<Seq>,
    pub latest_prediction: Option<Prediction>,
    /// Why the message reached its terminal status, if it has.
    pub basis: Option<DecisionBasis>,
}

impl MessageState {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.flags.values().filter(|f| f.verdict == verdict).count()
    }

    pub fn flag_list(&self) -> Vec<FlagEvent> {
        self.flags.values().copied().collect()
    }
}

/// Monotone counters reported through the metrics endpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub messages: u64,
    pub flags: u64,
    /// Flags on already-terminal messages: logged, otherwise without effect.
    pub ignored_flags: u64,
    pub editorial_labels: u64,
    pub removals_editorial: u64,
    pub removals_model: u64,
    pub restorations: u64,
    pub predictions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformState {
    pub(crate) model_config: ModelConfig,
    pub(crate) policy: PolicyConfig,
    pub(crate) last_seq: Seq,
    pub(crate) messages: BTreeMap<MessageId, MessageState>,
    pub(crate) editorial: BTreeMap<MessageId, EditorialLabel>,
    pub(crate) reputations: BTreeMap<UserRef, ReputationRecord>,
    pub(crate) params: ModelParams,
    pub(crate) training_examples: u64,
    pub(crate) predictions: Vec<Prediction>,
    pub(crate) counters: Counters,
}

/// What an applied event did, for API responses and simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Applied {
    pub seq: Seq,
    pub message_id: MessageId,
    pub status: MessageStatus,
    pub prediction: Option<Prediction>,
    pub decision: Option<Decision>,
    pub model_version: u64,
}

/// A validated, fully computed transition that has not been committed yet.
#[derive(Debug, Clone)]
pub struct Plan {
    seq: Seq,
    change: Change,
}

#[derive(Debug, Clone)]
enum Change {
    Post(MessageRecord),
    IgnoredFlag(MessageId),
    Flag {
        flag: FlagEvent,
        prediction: Option<Prediction>,
        decision: Option<Decision>,
        status: MessageStatus,
    },
    Label {
        label: EditorialLabel,
        params: ModelParams,
        reputations: Vec<ReputationRecord>,
        decision: Decision,
        status: MessageStatus,
    },
}

impl PlatformState {
    pub fn new(model_config: ModelConfig, policy: PolicyConfig) -> Self {
        let params = ModelParams::initial(&model_config);
        Self {
            model_config,
            policy,
            last_seq: 0,
            messages: BTreeMap::new(),
            editorial: BTreeMap::new(),
            reputations: BTreeMap::new(),
            params,
            training_examples: 0,
            predictions: Vec::new(),
            counters: Counters::default(),
        }
    }

    pub fn last_seq(&self) -> Seq {
        self.last_seq
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn model_params(&self) -> &ModelParams {
        &self.params
    }

    pub fn model_version(&self) -> u64 {
        self.params.version
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn training_examples(&self) -> u64 {
        self.training_examples
    }

    pub fn message_state(&self, id: MessageId) -> Option<&MessageState> {
        self.messages.get(&id)
    }

    pub fn messages(&self) -> impl Iterator<Item = &MessageState> {
        self.messages.values()
    }

    pub fn editorial_label(&self, id: MessageId) -> Option<&EditorialLabel> {
        self.editorial.get(&id)
    }

    pub fn reputation(&self, user: UserRef) -> Option<&ReputationRecord> {
        self.reputations.get(&user)
    }

    pub fn prediction_history(&self) -> &[Prediction] {
        &self.predictions
    }

    pub fn next_message_id(&self) -> MessageId {
        self.messages.keys().next_back().map_or(1, |id| id + 1)
    }

    /// The review queue in policy order.
    pub fn review_queue(&self) -> Vec<ReviewQueueEntry> {
        let entries = self
            .messages
            .values()
            .filter_map(|m| {
                queue_membership(
                    &m.record,
                    &m.flag_list(),
                    self.editorial.contains_key(&m.record.message_id),
                    m.latest_prediction.as_ref(),
                    m.first_flag_seq,
                    &self.policy,
                )
            })
            .collect();
        prioritize_queue(entries, self.policy.queue_mode)
    }

    /// Validate `event` and compute its effects without mutating the state.
    pub fn plan(&self, event: &Event) -> Result<Plan> {
        let expected = self.last_seq + 1;
        if event.seq != expected {
            return Err(Error::OutOfOrderEvent {
                expected,
                got: event.seq,
            });
        }
        let seq = event.seq;
        let change = match &event.body {
            EventBody::MessagePosted {
                message_id,
                author,
                text,
            } => {
                if self.messages.contains_key(message_id) {
                    return Err(Error::ContractViolation(format!(
                        "message id {message_id} already exists"
                    )));
                }
                Change::Post(MessageRecord {
                    message_id: *message_id,
                    author: *author,
                    text: text.clone(),
                    created_at: seq,
                    status: MessageStatus::Active,
                })
            }
            EventBody::FlagSubmitted {
                message_id,
                flagger,
                verdict,
            } => {
                let m = self
                    .messages
                    .get(message_id)
                    .ok_or(Error::UnknownMessage(*message_id))?;
                if m.record.status.is_terminal() {
                    Change::IgnoredFlag(*message_id)
                } else {
                    let flag = FlagEvent {
                        message_id: *message_id,
                        flagger: *flagger,
                        verdict: *verdict,
                        seq,
                    };
                    self.plan_flag(m, flag)?
                }
            }
            EventBody::EditorialLabeled {
                message_id,
                moderator,
                verdict,
            } => {
                let label = EditorialLabel {
                    message_id: *message_id,
                    moderator: *moderator,
                    verdict: *verdict,
                    seq,
                };
                self.plan_label(label)?
            }
        };
        Ok(Plan { seq, change })
    }

    fn plan_flag(&self, m: &MessageState, flag: FlagEvent) -> Result<Change> {
        let prediction = make_prediction_example(self, &flag)?;
        let mut status = m.record.status;
        let mut decision = None;
        if flag.verdict == Verdict::Toxic || prediction.is_some() {
            let mut toxic = m.count(Verdict::Toxic);
            match (m.flags.get(&flag.flagger).map(|f| f.verdict), flag.verdict) {
                (Some(Verdict::Toxic), Verdict::Acceptable) => toxic -= 1,
                (None | Some(Verdict::Acceptable), Verdict::Toxic) => toxic += 1,
                _ => {}
            }
            let latest = prediction.or(m.latest_prediction);
            let d = decide(&m.record, None, latest.as_ref(), toxic, &self.policy);
            let target = match d.outcome {
                Outcome::Remove => Some(MessageStatus::Removed),
                Outcome::NeedsReview => Some(MessageStatus::UnderReview),
                Outcome::Keep => None,
            };
            if let Some(t) = target.filter(|t| status.can_advance_to(*t)) {
                status = t;
            }
            decision = Some(d);
        }
        Ok(Change::Flag {
            flag,
            prediction,
            decision,
            status,
        })
    }

    fn plan_label(&self, label: EditorialLabel) -> Result<Change> {
        let example = make_training_example(self, &label)?;
        let params = train_update(&self.params, &example, self.model_config.learning_rate)?;
        let m = &self.messages[&label.message_id];
        let reputations = m
            .flags
            .values()
            .map(|f| {
                let rep = self
                    .reputations
                    .get(&f.flagger)
                    .copied()
                    .unwrap_or_else(|| ReputationRecord::new(f.flagger));
                update_reputation(rep, f.verdict, label.verdict)
            })
            .collect();
        let decision = decide(
            &m.record,
            Some(&label),
            m.latest_prediction.as_ref(),
            m.count(Verdict::Toxic),
            &self.policy,
        );
        let status = match decision.outcome {
            Outcome::Remove => MessageStatus::Removed,
            _ => MessageStatus::Cleared,
        };
        Ok(Change::Label {
            label,
            params,
            reputations,
            decision,
            status,
        })
    }

    /// Apply a plan produced by [`PlatformState::plan`] on this same state.
    pub fn commit(&mut self, plan: Plan) -> Applied {
        debug_assert_eq!(plan.seq, self.last_seq + 1);
        self.last_seq = plan.seq;
        let seq = plan.seq;
        match plan.change {
            Change::Post(record) => {
                let id = record.message_id;
                self.counters.messages += 1;
                self.messages.insert(
                    id,
                    MessageState {
                        record,
                        flags: BTreeMap::new(),
                        first_flag_seq: None,
                        latest_prediction: None,
                        basis: None,
                    },
                );
                self.applied(seq, id, None, None)
            }
            Change::IgnoredFlag(id) => {
                self.counters.flags += 1;
                self.counters.ignored_flags += 1;
                self.applied(seq, id, None, None)
            }
            Change::Flag {
                flag,
                prediction,
                decision,
                status,
            } => {
                self.counters.flags += 1;
                let m = self
                    .messages
                    .get_mut(&flag.message_id)
                    .expect("planned against this state");
                m.flags.insert(flag.flagger, flag);
                if flag.verdict == Verdict::Toxic && m.first_flag_seq.is_none() {
                    m.first_flag_seq = Some(flag.seq);
                }
                if let Some(p) = prediction {
                    m.latest_prediction = Some(p);
                    self.predictions.push(p);
                    self.counters.predictions += 1;
                }
                if status == MessageStatus::Removed && m.record.status != MessageStatus::Removed {
                    m.basis = Some(DecisionBasis::ModelAboveThreshold);
                    self.counters.removals_model += 1;
                }
                m.record.status = status;
                self.applied(seq, flag.message_id, prediction, decision)
            }
            Change::Label {
                label,
                params,
                reputations,
                decision,
                status,
            } => {
                let id = label.message_id;
                self.counters.editorial_labels += 1;
                self.training_examples += 1;
                self.params = params;
                for rep in reputations {
                    self.reputations.insert(rep.user, rep);
                }
                let m = self
                    .messages
                    .get_mut(&id)
                    .expect("planned against this state");
                let was_removed = m.record.status == MessageStatus::Removed;
                match status {
                    MessageStatus::Removed if !was_removed => self.counters.removals_editorial += 1,
                    MessageStatus::Cleared if was_removed => self.counters.restorations += 1,
                    _ => {}
                }
                m.record.status = status;
                m.basis = Some(decision.basis);
                self.editorial.insert(id, label);
                self.applied(seq, id, None, Some(decision))
            }
        }
    }

    /// Validate and apply one event. On error the state is unchanged.
    pub fn apply(&mut self, event: &Event) -> Result<Applied> {
        let plan = self.plan(event)?;
        Ok(self.commit(plan))
    }

    fn applied(
        &self,
        seq: Seq,
        id: MessageId,
        prediction: Option<Prediction>,
        decision: Option<Decision>,
    ) -> Applied {
        Applied {
            seq,
            message_id: id,
            status: self.messages[&id].record.status,
            prediction,
            decision,
            model_version: self.params.version,
        }
    }
}

/// Pure form of [`PlatformState::apply`].
pub fn apply_event(state: &PlatformState, event: &Event) -> Result<PlatformState> {
    let mut next = state.clone();
    next.apply(event)?;
    Ok(next)
}

impl ModerationView for PlatformState {
    fn message(&self, id: MessageId) -> Option<&MessageRecord> {
        self.messages.get(&id).map(|m| &m.record)
    }

    fn effective_flags(&self, id: MessageId) -> Vec<FlagEvent> {
        self.messages
            .get(&id)
            .map(MessageState::flag_list)
            .unwrap_or_default()
    }

    fn has_editorial(&self, id: MessageId) -> bool {
        self.editorial.contains_key(&id)
    }

    fn reputations(&self) -> &BTreeMap<UserRef, ReputationRecord> {
        &self.reputations
    }

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn model_config(&self) -> &ModelConfig {
        &self.model_config
    }
}
