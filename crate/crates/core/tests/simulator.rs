use std::io::{self, BufReader, Write};
use std::sync::{Arc, Mutex};

use modhub_core::service::{replay_log, EventLog};
use modhub_core::sim::{
    compare_policies, run_simulation, run_simulation_traced, CohortSpec, ExposureMode, SimConfig,
    World,
};
use modhub_core::{state_hash, Error, MessageStatus, PolicyConfig};

fn small(seed: u64) -> SimConfig {
    SimConfig {
        n_users: 60,
        n_messages: 400,
        exposures_per_message: 6.0,
        editorial_budget: 40,
        rounds: 4,
        ..SimConfig::canonical(seed)
    }
}

#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[test]
fn no_toxic_messages_means_no_true_takedowns() {
    let m = run_simulation(&SimConfig {
        toxic_rate: 0.0,
        ..small(1)
    })
    .unwrap();
    assert_eq!(m.toxic_messages, 0);
    assert_eq!(m.removed_toxic, 0);
    assert_eq!(m.recall_all, None);
    assert_eq!(m.editorial_labels_per_true_takedown, None);
}

#[test]
fn silent_users_leave_the_queue_empty() {
    let mut cfg = small(2);
    for c in &mut cfg.cohorts {
        c.flag_propensity = 0.0;
    }
    let m = run_simulation(&cfg).unwrap();
    assert_eq!(m.removed, 0);
    assert_eq!(m.editorial_labels_used, 0);
    assert_eq!(m.model_version, 0);
    assert!(m.rounds.iter().all(|r| r.review_fraction == Some(0.0)));
}

#[test]
fn runs_are_deterministic() {
    for cfg in [
        small(3),
        SimConfig {
            rounds: 1,
            ..small(3)
        },
        SimConfig {
            exposure: ExposureMode::PostingRound,
            ..small(3)
        },
    ] {
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
    }
    assert_ne!(
        run_simulation(&small(3)).unwrap().state_hash,
        run_simulation(&small(4)).unwrap().state_hash
    );
}

#[test]
fn perfect_flaggers_and_ample_budget_never_remove_wrongly() {
    let cfg = SimConfig {
        cohorts: vec![CohortSpec {
            fraction: 1.0,
            flag_accuracy: 1.0,
            flag_propensity: 0.4,
        }],
        editorial_budget: 10_000,
        ..small(5)
    };
    let m = run_simulation(&cfg).unwrap();
    assert!(m.removed > 0);
    assert_eq!(m.precision_all, Some(1.0));
}

#[test]
fn zero_budget_never_trains_so_nothing_is_removed() {
    let cfg = SimConfig {
        editorial_budget: 0,
        ..small(6)
    };
    assert!(cfg.policy.auto_remove_enabled);
    let m = run_simulation(&cfg).unwrap();
    assert_eq!(m.removed, 0);
    assert_eq!(m.model_version, 0);
}

#[test]
fn budget_is_respected() {
    for budget in [0, 1, 7, 40] {
        let m = run_simulation(&SimConfig {
            editorial_budget: budget,
            ..small(7)
        })
        .unwrap();
        assert!(m.editorial_labels_used <= budget);
        let per_round: Vec<_> = m.rounds.iter().map(|r| r.editorial_labels_used).collect();
        assert!(per_round.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn comparison_rows_share_ground_truth() {
    let cfg = small(8);
    let rows = compare_policies(
        &cfg,
        &[
            PolicyConfig::primitive(),
            PolicyConfig::learned(),
            PolicyConfig::learned(),
        ],
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows
        .iter()
        .all(|r| r.ground_truth_digest == rows[0].ground_truth_digest));
    assert!(rows
        .iter()
        .all(|r| r.toxic_messages == rows[0].toxic_messages));
    assert_eq!(rows[1], rows[2]);
    assert_eq!(rows[0].auto_removed, 0);
    assert!(matches!(compare_policies(&cfg, &[]), Err(Error::Config(_))));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(9);
    cfg.cohorts[0].fraction = 0.5;
    assert!(matches!(run_simulation(&cfg), Err(Error::Config(_))));
    assert!(matches!(
        run_simulation(&SimConfig {
            rounds: 0,
            ..small(9)
        }),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        run_simulation(&SimConfig {
            toxic_rate: 1.5,
            ..small(9)
        }),
        Err(Error::Config(_))
    ));
}

#[test]
fn trace_replays_to_final_hash() {
    let cfg = small(10);
    let buf = SharedBuf::default();
    let m = run_simulation_traced(&cfg, Some(EventLog::new(Box::new(buf.clone())))).unwrap();
    let bytes = buf.0.lock().unwrap().clone();
    assert!(!bytes.is_empty());
    let state = replay_log(
        BufReader::new(&bytes[..]),
        cfg.model.clone(),
        cfg.policy.clone(),
    )
    .unwrap();
    assert_eq!(state_hash(&state).to_string(), m.state_hash);
}

#[test]
fn removed_messages_stay_removed() {
    let cfg = small(11);
    let mut world = World::new(cfg.clone(), None).unwrap();
    let mut removed = std::collections::BTreeSet::new();
    for round in 0..cfg.rounds {
        world.run_round(round).unwrap();
        for m in world.state().messages() {
            let id = m.record.message_id;
            if removed.contains(&id) {
                assert_eq!(
                    m.record.status,
                    MessageStatus::Removed,
                    "message {id} left Removed"
                );
            }
            if m.record.status == MessageStatus::Removed {
                removed.insert(id);
            }
        }
    }
    assert_eq!(world.ground_truth().len(), cfg.n_messages);
}
