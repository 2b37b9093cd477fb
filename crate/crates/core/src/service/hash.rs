//! Canonical state digest.
//!
//! Fields are written in a fixed order, integers little-endian, reals as
//! their IEEE-754 bit patterns, strings length-prefixed, and maps in key
//! order, then hashed with SHA-256.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::state::{Counters, MessageState, PlatformState};
use crate::model::{ModelParams, Prediction};
use crate::policy::{DecisionBasis, QueueMode};
use crate::types::{MessageStatus, UserRef, Verdict};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateHash(pub [u8; 32]);

impl fmt::Display for StateHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for StateHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateHash({self})")
    }
}

impl FromStr for StateHash {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut out)?;
        Ok(Self(out))
    }
}

struct Canon(Sha256);

impl Canon {
    fn u8(&mut self, v: u8) {
        self.0.update([v]);
    }

    fn u64(&mut self, v: u64) {
        self.0.update(v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn bool(&mut self, v: bool) {
        self.u8(u8::from(v));
    }

    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.update(s.as_bytes());
    }

    fn user(&mut self, u: UserRef) {
        self.u64(u.0);
    }

    fn verdict(&mut self, v: Verdict) {
        self.u8(v.as_u8());
    }

    fn opt<T>(&mut self, v: Option<T>, f: impl FnOnce(&mut Self, T)) {
        match v {
            None => self.u8(0),
            Some(x) => {
                self.u8(1);
                f(self, x);
            }
        }
    }

    fn prediction(&mut self, p: &Prediction) {
        self.u64(p.message_id);
        self.f64(p.probability);
        self.u64(p.model_version);
        self.u64(p.seq);
    }

    fn message(&mut self, m: &MessageState) {
        let r = &m.record;
        self.u64(r.message_id);
        self.user(r.author);
        self.str(&r.text);
        self.u64(r.created_at);
        self.u8(match r.status {
            MessageStatus::Active => 0,
            MessageStatus::UnderReview => 1,
            MessageStatus::Removed => 2,
            MessageStatus::Cleared => 3,
        });
        self.len(m.flags.len());
        for f in m.flags.values() {
            self.user(f.flagger);
            self.verdict(f.verdict);
            self.u64(f.seq);
        }
        self.opt(m.first_flag_seq, Self::u64);
        self.opt(m.latest_prediction.as_ref(), Self::prediction);
        self.opt(m.basis, |c, b| {
            c.u8(match b {
                DecisionBasis::EditorialToxic => 0,
                DecisionBasis::EditorialAcceptable => 1,
                DecisionBasis::ModelAboveThreshold => 2,
                DecisionBasis::InsufficientEvidence => 3,
            })
        });
    }

    fn params(&mut self, p: &ModelParams) {
        self.len(p.layout.embedding_dim);
        self.len(p.layout.hash_buckets);
        self.len(p.weights.len());
        for &w in &p.weights {
            self.f64(w);
        }
        self.f64(p.bias);
        self.len(p.embeddings.len());
        for (u, e) in &p.embeddings {
            self.user(*u);
            self.len(e.0.len());
            for &v in &e.0 {
                self.f64(v);
            }
        }
        self.u64(p.version);
    }

    fn counters(&mut self, c: &Counters) {
        for v in [
            c.messages,
            c.flags,
            c.ignored_flags,
            c.editorial_labels,
            c.removals_editorial,
            c.removals_model,
            c.restorations,
            c.predictions,
        ] {
            self.u64(v);
        }
    }
}

pub fn state_hash(state: &PlatformState) -> StateHash {
    let mut c = Canon(Sha256::new());
    c.str("modhub-state-v1");

    let m = &state.model_config;
    c.len(m.embedding_dim);
    c.f64(m.learning_rate);
    c.len(m.hash_buckets);
    c.f64(m.embedding_weight_init);
    c.bool(m.rescore_on_acceptable);
    let p = &state.policy;
    c.f64(p.threshold);
    c.len(p.min_flags_for_queue);
    c.u8(match p.queue_mode {
        QueueMode::Primitive => 0,
        QueueMode::Learned => 1,
    });
    c.bool(p.auto_remove_enabled);

    c.u64(state.last_seq);
    c.len(state.messages.len());
    for m in state.messages.values() {
        c.message(m);
    }
    c.len(state.editorial.len());
    for l in state.editorial.values() {
        c.u64(l.message_id);
        c.user(l.moderator);
        c.verdict(l.verdict);
        c.u64(l.seq);
    }
    c.len(state.reputations.len());
    for r in state.reputations.values() {
        c.user(r.user);
        c.u64(r.agree_count);
        c.u64(r.disagree_count);
    }
    c.params(&state.params);
    c.u64(state.training_examples);
    c.len(state.predictions.len());
    for p in &state.predictions {
        c.prediction(p);
    }
    c.counters(&state.counters);
    StateHash(c.0.finalize().into())
}
