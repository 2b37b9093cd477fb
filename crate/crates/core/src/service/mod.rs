//! Event-sourced moderation service.
//!
//! Every accepted request becomes one [`Event`]; the [`PlatformState`] is a
//! pure fold of those events, so replaying the JSONL log reproduces the live
//! state exactly (checked with [`state_hash`]). Writes go through a single
//! [`Service`] value, which validates an event, appends it to the log, and
//! only then commits it.

mod config;
mod event;
mod hash;
mod log;
mod metrics;
mod state;

use std::fs::File;
use std::io::{BufReader, Write};

pub use config::ServiceConfig;
pub use event::{Event, EventBody};
pub use hash::{state_hash, StateHash};
pub use log::{replay_file, replay_log, EventLog};
pub use metrics::{MetricsSnapshot, Removals};
pub use state::{apply_event, Applied, Counters, MessageState, Plan, PlatformState};

use crate::model::{anonymize_user, AnonKey, ModelConfig};
use crate::policy::PolicyConfig;
use crate::types::{MessageId, UserRef, Verdict};
use crate::{Error, Result};

pub type BoxedLog = EventLog<Box<dyn Write + Send + Sync>>;

/// Single writer over the platform state and its log.
pub struct Service {
    state: PlatformState,
    log: Option<BoxedLog>,
    key: AnonKey,
}

impl Service {
    /// A service without a log; used by the simulator and tests.
    pub fn in_memory(model: ModelConfig, policy: PolicyConfig, key: AnonKey) -> Self {
        Self {
            state: PlatformState::new(model, policy),
            log: None,
            key,
        }
    }

    pub fn with_log(state: PlatformState, log: BoxedLog, key: AnonKey) -> Self {
        Self {
            state,
            log: Some(log),
            key,
        }
    }

    /// Replay the log in `data_dir` (if any) and keep appending to it.
    pub fn open(cfg: &ServiceConfig) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(&cfg.data_dir)?;
        let path = cfg.log_path();
        let state = if path.exists() {
            replay_log(
                BufReader::new(File::open(&path)?),
                cfg.model.clone(),
                cfg.policy.clone(),
            )?
        } else {
            PlatformState::new(cfg.model.clone(), cfg.policy.clone())
        };
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        Ok(Self::with_log(
            state,
            EventLog::new(Box::new(file)),
            cfg.anon_key()?,
        ))
    }

    pub fn state(&self) -> &PlatformState {
        &self.state
    }

    pub fn into_state(self) -> PlatformState {
        self.state
    }

    pub fn anonymize(&self, raw_id: &str) -> Result<UserRef> {
        anonymize_user(raw_id, &self.key)
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        MetricsSnapshot::of(&self.state)
    }

    pub fn hash(&self) -> StateHash {
        state_hash(&self.state)
    }

    /// Assign the next seq, validate, log, then commit.
    pub fn submit(&mut self, body: EventBody) -> Result<Applied> {
        if self.log.as_ref().is_some_and(EventLog::is_failed) {
            return Err(Error::WriteRefused);
        }
        let event = Event {
            seq: self.state.last_seq() + 1,
            body,
        };
        let plan = self.state.plan(&event)?;
        if let Some(log) = self.log.as_mut() {
            log.append(&event)?;
        }
        Ok(self.state.commit(plan))
    }

    pub fn post_message(&mut self, author_raw_id: &str, text: &str) -> Result<Applied> {
        let author = self.anonymize(author_raw_id)?;
        let message_id = self.state.next_message_id();
        self.submit(EventBody::MessagePosted {
            message_id,
            author,
            text: text.to_owned(),
        })
    }

    pub fn flag(
        &mut self,
        message_id: MessageId,
        user_raw_id: &str,
        verdict: Verdict,
    ) -> Result<Applied> {
        let flagger = self.anonymize(user_raw_id)?;
        self.submit(EventBody::FlagSubmitted {
            message_id,
            flagger,
            verdict,
        })
    }

    pub fn label(
        &mut self,
        message_id: MessageId,
        moderator_raw_id: &str,
        verdict: Verdict,
    ) -> Result<Applied> {
        let moderator = self.anonymize(moderator_raw_id)?;
        self.submit(EventBody::EditorialLabeled {
            message_id,
            moderator,
            verdict,
        })
    }
}
