use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use sha2::{Digest, Sha256};

use super::metrics::{RoundMetrics, SimMetrics, Tally};
use super::population::{generate_population, sim_key, SyntheticUser};
use super::{ExposureMode, SimConfig};
use crate::policy::{DecisionBasis, PolicyConfig};
use crate::service::{BoxedLog, EventBody, PlatformState, Service, StateHash};
use crate::types::{MessageId, MessageStatus, Verdict};
use crate::{Error, Result};

const EDITOR_RAW_ID: &str = "sim-editor";
// Offset for the hub's own generator, which only a noisy hub uses.
const HUB_STREAM: u64 = 0x6875_625f_6e6f_6973;

/// A simulated platform: population, ground truth and an in-process service.
pub struct World {
    cfg: SimConfig,
    service: Service,
    users: Vec<SyntheticUser>,
    rng: ChaCha8Rng,
    hub_rng: ChaCha8Rng,
    truth: BTreeMap<MessageId, bool>,
    labels_used: usize,
    series: Vec<RoundMetrics>,
}

fn share(total: usize, parts: usize, index: usize) -> usize {
    let base = total / parts;
    if index + 1 == parts {
        base + total % parts
    } else {
        base
    }
}

impl World {
    pub fn new(cfg: SimConfig, log: Option<BoxedLog>) -> Result<Self> {
        let users = generate_population(&cfg)?;
        let key = sim_key(cfg.seed);
        let state = PlatformState::new(cfg.model.clone(), cfg.policy.clone());
        let service = match log {
            Some(log) => Service::with_log(state, log, key),
            None => Service::in_memory(cfg.model.clone(), cfg.policy.clone(), key),
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            hub_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ HUB_STREAM),
            cfg,
            service,
            users,
            truth: BTreeMap::new(),
            labels_used: 0,
            series: Vec::new(),
        })
    }

    pub fn state(&self) -> &PlatformState {
        self.service.state()
    }

    pub fn users(&self) -> &[SyntheticUser] {
        &self.users
    }

    pub fn hash(&self) -> StateHash {
        self.service.hash()
    }

    pub fn ground_truth(&self) -> &BTreeMap<MessageId, bool> {
        &self.truth
    }

    pub fn labels_used(&self) -> usize {
        self.labels_used
    }

    fn synthetic_text(&mut self, toxic: bool) -> String {
        let spec = &self.cfg.text;
        let rate = if toxic {
            spec.marker_rate_toxic
        } else {
            spec.marker_rate_acceptable
        };
        let mut words = Vec::with_capacity(spec.tokens_per_message);
        for _ in 0..spec.tokens_per_message {
            if self.rng.random_bool(rate) {
                words.push(format!("m{}", self.rng.random_range(0..spec.markers)));
            } else {
                words.push(format!("w{}", self.rng.random_range(0..spec.vocabulary)));
            }
        }
        words.join(" ")
    }

    fn post(&mut self) -> Result<MessageId> {
        let toxic = self.rng.random_bool(self.cfg.toxic_rate);
        let author = self.users[self.rng.random_range(0..self.users.len())].user;
        let text = self.synthetic_text(toxic);
        let message_id = self.service.state().next_message_id();
        self.service.submit(EventBody::MessagePosted {
            message_id,
            author,
            text,
        })?;
        self.truth.insert(message_id, toxic);
        Ok(message_id)
    }

    fn expose(&mut self, message_id: MessageId, exposures: Option<&Poisson<f64>>) -> Result<()> {
        let truth = if self.truth[&message_id] {
            Verdict::Toxic
        } else {
            Verdict::Acceptable
        };
        // Removed messages are hidden and collect no flags, but their draws are
        // still consumed so the stream stays independent of the policy.
        let visible = self
            .service
            .state()
            .message_state(message_id)
            .is_some_and(|m| m.record.status != MessageStatus::Removed);
        let n = exposures.map_or(0, |d| d.sample(&mut self.rng) as u64);
        for _ in 0..n {
            let u = &self.users[self.rng.random_range(0..self.users.len())];
            let (flagger, propensity, accuracy) = (u.user, u.flag_propensity, u.flag_accuracy);
            if !self.rng.random_bool(propensity) {
                continue;
            }
            let verdict = if self.rng.random_bool(accuracy) {
                truth
            } else {
                truth.flipped()
            };
            if visible {
                self.service.submit(EventBody::FlagSubmitted {
                    message_id,
                    flagger,
                    verdict,
                })?;
            }
        }
        Ok(())
    }

    /// Post this round's messages, expose messages to users, then let the
    /// editorial agent work the head of the review queue with its budget slice.
    pub fn run_round(&mut self, round: usize) -> Result<()> {
        let exposures = if self.cfg.exposures_per_message > 0.0 {
            Some(
                Poisson::new(self.cfg.exposures_per_message)
                    .map_err(|e| Error::Config(e.to_string()))?,
            )
        } else {
            None
        };
        let mut fresh = Vec::new();
        for _ in 0..share(self.cfg.n_messages, self.cfg.rounds, round) {
            fresh.push(self.post()?);
        }
        let shown: Vec<MessageId> = match self.cfg.exposure {
            ExposureMode::EveryRound => self.truth.keys().copied().collect(),
            ExposureMode::PostingRound => fresh,
        };
        for id in shown {
            self.expose(id, exposures.as_ref())?;
        }

        // Labels never change other entries' counts or stored predictions, so
        // taking the head repeatedly is the same as taking a prefix once.
        let slice = share(self.cfg.editorial_budget, self.cfg.rounds, round);
        let picks: Vec<MessageId> = self
            .service
            .state()
            .review_queue()
            .iter()
            .take(slice)
            .map(|e| e.message_id)
            .collect();
        let moderator = self.service.anonymize(EDITOR_RAW_ID)?;
        for id in picks {
            let mut verdict = if self.truth[&id] {
                Verdict::Toxic
            } else {
                Verdict::Acceptable
            };
            if self.cfg.hub_accuracy < 1.0 && !self.hub_rng.random_bool(self.cfg.hub_accuracy) {
                verdict = verdict.flipped();
            }
            self.service.submit(EventBody::EditorialLabeled {
                message_id: id,
                moderator,
                verdict,
            })?;
            self.labels_used += 1;
        }
        let tally = self.tally();
        self.series.push(RoundMetrics::from_tally(
            round,
            &tally,
            self.service.state().model_version(),
        ));
        Ok(())
    }

    fn tally(&self) -> Tally {
        let state = self.service.state();
        let queued: BTreeSet<MessageId> =
            state.review_queue().iter().map(|e| e.message_id).collect();
        let mut t = Tally {
            labels_used: self.labels_used,
            ..Tally::default()
        };
        for m in state.messages() {
            let id = m.record.message_id;
            let toxic = self.truth.get(&id).copied().unwrap_or(false);
            t.messages += 1;
            t.toxic += usize::from(toxic);
            if m.record.status == MessageStatus::Removed {
                t.removed += 1;
                t.removed_toxic += usize::from(toxic);
                if m.basis == Some(DecisionBasis::ModelAboveThreshold) {
                    t.auto_removed += 1;
                    t.auto_removed_toxic += usize::from(toxic);
                }
            }
            if state.editorial_label(id).is_some() || queued.contains(&id) {
                t.manual_review += 1;
            }
        }
        t
    }

    pub fn metrics(&self) -> SimMetrics {
        let state = self.service.state();
        let mut digest = Sha256::new();
        for (id, _) in self.truth.iter().filter(|(_, toxic)| **toxic) {
            digest.update(id.to_le_bytes());
        }
        let cohorts = self.cfg.cohorts.len();
        let mut sums = vec![(0.0, 0usize); cohorts];
        for u in &self.users {
            let r = state.reputation(u.user).map_or(0.5, |r| r.reliability());
            sums[u.cohort].0 += r;
            sums[u.cohort].1 += 1;
        }
        let mut m = SimMetrics {
            data: "synthetic".into(),
            seed: self.cfg.seed,
            policy: self.cfg.policy.clone(),
            messages: 0,
            toxic_messages: 0,
            auto_removed: 0,
            auto_removed_toxic: 0,
            removed: 0,
            removed_toxic: 0,
            precision_auto: None,
            recall_auto: None,
            precision_all: None,
            recall_all: None,
            editorial_labels_used: 0,
            editorial_labels_per_true_takedown: None,
            review_fraction: None,
            cohort_mean_reliability: sums
                .iter()
                .map(|&(s, n)| if n == 0 { 0.5 } else { s / n as f64 })
                .collect(),
            model_version: state.model_version(),
            rounds: self.series.clone(),
            ground_truth_digest: hex::encode(digest.finalize()),
            state_hash: self.hash().to_string(),
        };
        m.fill(&self.tally());
        m
    }
}

pub fn run_simulation_traced(cfg: &SimConfig, trace: Option<BoxedLog>) -> Result<SimMetrics> {
    cfg.validate()?;
    let mut world = World::new(cfg.clone(), trace)?;
    for round in 0..cfg.rounds {
        world.run_round(round)?;
    }
    Ok(world.metrics())
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimMetrics> {
    run_simulation_traced(cfg, None)
}

/// Run the same scenario under each policy. Runs are independent and execute
/// on separate threads; each sees identical random draws.
pub fn compare_policies(cfg: &SimConfig, policies: &[PolicyConfig]) -> Result<Vec<SimMetrics>> {
    if policies.is_empty() {
        return Err(Error::Config("compare needs at least one policy".into()));
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = policies
            .iter()
            .map(|p| {
                let run = SimConfig {
                    policy: p.clone(),
                    ..cfg.clone()
                };
                scope.spawn(move || run_simulation(&run))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
