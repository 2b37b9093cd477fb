use std::io::{self, BufReader, Write};
use std::sync::{Arc, Mutex};

use modhub_core::model::AnonKey;
use modhub_core::service::{replay_log, EventLog};
use modhub_core::{
    make_prediction_example, make_training_example, state_hash, EditorialLabel, Error, Event,
    EventBody, FlagEvent, MessageStatus, ModelConfig, ModerationView, PlatformState, PolicyConfig,
    Service, UserRef, Verdict,
};

fn key() -> AnonKey {
    AnonKey::new(*b"service-test-key")
}

fn service() -> Service {
    Service::in_memory(ModelConfig::default(), PolicyConfig::default(), key())
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

impl SharedBuf {
    fn text(&self) -> String {
        String::from_utf8(self.0.lock().unwrap().clone()).unwrap()
    }
}

/// Fails every write after the first `ok` writes.
struct FlakyDisk {
    ok: usize,
}

impl Write for FlakyDisk {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.ok == 0 {
            return Err(io::Error::other("disk full"));
        }
        self.ok -= 1;
        Ok(buf.len())
    }
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn logged_service() -> (Service, SharedBuf) {
    let buf = SharedBuf::default();
    let state = PlatformState::new(ModelConfig::default(), PolicyConfig::default());
    (
        Service::with_log(state, EventLog::new(Box::new(buf.clone())), key()),
        buf,
    )
}

#[test]
fn initial_state_hash_is_pinned() {
    let state = PlatformState::new(ModelConfig::default(), PolicyConfig::default());
    assert_eq!(
        state_hash(&state).to_string(),
        "c89d9287a1c16869d09dc8646b39d0be0c040707593f5bb3ce22dc04adcb182a"
    );
}

#[test]
fn flag_on_unknown_message_leaves_state_unchanged() {
    let mut s = service();
    s.post_message("alice", "hello").unwrap();
    let before = s.hash();
    let err = s.flag(42, "bob", Verdict::Toxic).unwrap_err();
    assert!(matches!(err, Error::UnknownMessage(42)));
    assert_eq!(s.hash(), before);
    assert_eq!(s.state().last_seq(), 1);
}

#[test]
fn editorial_label_trains_and_touches_every_flagger() {
    let mut s = service();
    let id = s
        .post_message("author", "some text here")
        .unwrap()
        .message_id;
    s.flag(id, "u1", Verdict::Toxic).unwrap();
    s.flag(id, "u2", Verdict::Toxic).unwrap();
    s.flag(id, "u3", Verdict::Acceptable).unwrap();
    let version = s.state().model_version();
    let applied = s.label(id, "editor", Verdict::Toxic).unwrap();
    assert_eq!(applied.model_version, version + 1);
    assert_eq!(applied.status, MessageStatus::Removed);
    let touched: Vec<_> = ["u1", "u2", "u3"]
        .iter()
        .map(|u| *s.state().reputation(s.anonymize(u).unwrap()).unwrap())
        .collect();
    assert_eq!(touched.len(), 3);
    assert_eq!((touched[0].agree_count, touched[0].disagree_count), (1, 0));
    assert_eq!((touched[2].agree_count, touched[2].disagree_count), (0, 1));
    assert_eq!(s.state().training_examples(), 1);
    assert_eq!(s.state().counters().removals_editorial, 1);
}

#[test]
fn latest_flag_wins() {
    let mut s = service();
    let id = s.post_message("author", "x").unwrap().message_id;
    s.flag(id, "u1", Verdict::Toxic).unwrap();
    s.flag(id, "u2", Verdict::Toxic).unwrap();
    assert_eq!(
        s.state().message_state(id).unwrap().count(Verdict::Toxic),
        2
    );
    s.flag(id, "u1", Verdict::Acceptable).unwrap();
    let m = s.state().message_state(id).unwrap();
    assert_eq!(m.count(Verdict::Toxic), 1);
    assert_eq!(m.count(Verdict::Acceptable), 1);
    assert_eq!(
        m.flags[&s.anonymize("u1").unwrap()].verdict,
        Verdict::Acceptable
    );
}

#[test]
fn duplicate_editorial_label_rejected() {
    let mut s = service();
    let id = s.post_message("author", "x").unwrap().message_id;
    s.label(id, "editor", Verdict::Acceptable).unwrap();
    let before = s.hash();
    assert!(matches!(
        s.label(id, "editor2", Verdict::Toxic),
        Err(Error::DuplicateEditorialLabel(_))
    ));
    assert_eq!(s.hash(), before);
    assert_eq!(
        s.state().message_state(id).unwrap().record.status,
        MessageStatus::Cleared
    );
}

#[test]
fn out_of_order_event_rejected() {
    let mut state = PlatformState::new(ModelConfig::default(), PolicyConfig::default());
    let e = Event {
        seq: 2,
        body: EventBody::MessagePosted {
            message_id: 1,
            author: UserRef(1),
            text: "x".into(),
        },
    };
    assert!(matches!(
        state.apply(&e),
        Err(Error::OutOfOrderEvent {
            expected: 1,
            got: 2
        })
    ));
}

#[test]
fn training_example_snapshot() {
    let mut s = service();
    let id = s.post_message("author", "").unwrap().message_id;
    s.flag(id, "u1", Verdict::Toxic).unwrap();
    s.flag(id, "u2", Verdict::Toxic).unwrap();
    let label = EditorialLabel {
        message_id: id,
        moderator: UserRef(1),
        verdict: Verdict::Toxic,
        seq: 4,
    };
    let ex = make_training_example(s.state(), &label).unwrap();
    assert!((ex.features.0[0] - 3f64.ln()).abs() < 1e-15);
    assert_eq!(ex.gold, Verdict::Toxic);
    assert_eq!(ex.toxic_flaggers.len(), 2);

    let empty = s.post_message("author", "").unwrap().message_id;
    let ex = make_training_example(
        s.state(),
        &EditorialLabel {
            message_id: empty,
            ..label
        },
    )
    .unwrap();
    assert!(ex.features.0[..4].iter().all(|&v| v == 0.0));

    let unknown = EditorialLabel {
        message_id: 999,
        ..label
    };
    assert!(matches!(
        make_training_example(s.state(), &unknown),
        Err(Error::UnknownMessage(999))
    ));
    s.label(id, "editor", Verdict::Toxic).unwrap();
    assert!(matches!(
        make_training_example(s.state(), &label),
        Err(Error::DuplicateEditorialLabel(_))
    ));
}

#[test]
fn prediction_examples_are_asymmetric() {
    let mut s = service();
    let id = s.post_message("author", "hello").unwrap().message_id;
    let f = |u: u64, verdict, seq| FlagEvent {
        message_id: id,
        flagger: UserRef(u),
        verdict,
        seq,
    };
    assert!(
        make_prediction_example(s.state(), &f(1, Verdict::Acceptable, 2))
            .unwrap()
            .is_none()
    );
    assert!(make_prediction_example(s.state(), &f(1, Verdict::Toxic, 2))
        .unwrap()
        .is_some());
    let unknown = FlagEvent {
        message_id: 77,
        ..f(1, Verdict::Toxic, 2)
    };
    assert!(matches!(
        make_prediction_example(s.state(), &unknown),
        Err(Error::UnknownMessage(77))
    ));

    for (i, u) in ["a", "b", "c"].iter().enumerate() {
        let applied = s.flag(id, u, Verdict::Toxic).unwrap();
        assert!(
            applied.prediction.is_some(),
            "flag {i} produced no prediction"
        );
    }
    assert_eq!(s.state().prediction_history().len(), 3);
    assert!(s
        .flag(id, "d", Verdict::Acceptable)
        .unwrap()
        .prediction
        .is_none());
}

#[test]
fn rescore_on_acceptable_is_opt_in() {
    let cfg = ModelConfig {
        rescore_on_acceptable: true,
        ..ModelConfig::default()
    };
    let mut s = Service::in_memory(cfg, PolicyConfig::default(), key());
    let id = s.post_message("author", "x").unwrap().message_id;
    assert!(s
        .flag(id, "u", Verdict::Acceptable)
        .unwrap()
        .prediction
        .is_some());
}

#[test]
fn flags_after_adjudication_have_no_effect() {
    let mut s = service();
    let id = s.post_message("author", "x").unwrap().message_id;
    s.flag(id, "u1", Verdict::Toxic).unwrap();
    s.label(id, "editor", Verdict::Acceptable).unwrap();
    let rep = *s.state().reputation(s.anonymize("u1").unwrap()).unwrap();
    let params = s.state().model_params().clone();
    let applied = s.flag(id, "u1", Verdict::Acceptable).unwrap();
    assert_eq!(applied.status, MessageStatus::Cleared);
    assert!(applied.prediction.is_none());
    assert_eq!(
        *s.state().reputation(s.anonymize("u1").unwrap()).unwrap(),
        rep
    );
    assert_eq!(s.state().model_params(), &params);
    assert_eq!(s.state().message_state(id).unwrap().flags.len(), 1);
    assert_eq!(s.state().counters().ignored_flags, 1);
}

#[test]
fn untrained_model_never_removes() {
    let mut s = service();
    let id = s.post_message("author", "x").unwrap().message_id;
    for u in 0..50 {
        let applied = s.flag(id, &format!("u{u}"), Verdict::Toxic).unwrap();
        assert_eq!(applied.prediction.unwrap().model_version, 0);
        assert_eq!(applied.status, MessageStatus::UnderReview);
    }
}

#[test]
fn editorial_acceptable_restores_model_removal() {
    // A large learning rate makes a single toxic example push later scores over the threshold.
    let cfg = ModelConfig {
        learning_rate: 50.0,
        ..ModelConfig::default()
    };
    let mut s = Service::in_memory(cfg, PolicyConfig::default(), key());
    let a = s.post_message("author", "").unwrap().message_id;
    for u in ["u1", "u2", "u3"] {
        s.flag(a, u, Verdict::Toxic).unwrap();
    }
    s.label(a, "editor", Verdict::Toxic).unwrap();
    let b = s.post_message("author", "").unwrap().message_id;
    let mut last = s.flag(b, "u1", Verdict::Toxic).unwrap();
    for u in ["u2", "u3"] {
        if last.status == MessageStatus::Removed {
            break;
        }
        last = s.flag(b, u, Verdict::Toxic).unwrap();
    }
    assert_eq!(last.status, MessageStatus::Removed);
    assert!(last.prediction.unwrap().probability >= 0.95);
    assert_eq!(s.state().counters().removals_model, 1);

    let applied = s.label(b, "editor", Verdict::Acceptable).unwrap();
    assert_eq!(applied.status, MessageStatus::Cleared);
    assert_eq!(s.state().counters().restorations, 1);
    assert_eq!(s.state().counters().removals_model, 1);
}

#[test]
fn review_queue_follows_flags_and_labels() {
    let mut s = Service::in_memory(ModelConfig::default(), PolicyConfig::primitive(), key());
    let a = s.post_message("author", "a").unwrap().message_id;
    let b = s.post_message("author", "b").unwrap().message_id;
    let c = s.post_message("author", "c").unwrap().message_id;
    s.flag(a, "u1", Verdict::Toxic).unwrap();
    s.flag(b, "u1", Verdict::Toxic).unwrap();
    s.flag(a, "u2", Verdict::Toxic).unwrap();
    s.flag(c, "u3", Verdict::Acceptable).unwrap();
    let ids: Vec<_> = s
        .state()
        .review_queue()
        .iter()
        .map(|e| e.message_id)
        .collect();
    assert_eq!(ids, [a, b]);
    s.label(a, "editor", Verdict::Toxic).unwrap();
    let ids: Vec<_> = s
        .state()
        .review_queue()
        .iter()
        .map(|e| e.message_id)
        .collect();
    assert_eq!(ids, [b]);
}

#[test]
fn appends_are_sequential_and_parse_back() {
    let (mut s, buf) = logged_service();
    let id = s.post_message("alice", "hi there").unwrap().message_id;
    s.flag(id, "bob", Verdict::Toxic).unwrap();
    let text = buf.text();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0]
        .starts_with(r#"{"seq":1,"kind":"MessagePosted","payload":{"message_id":1,"author":""#));
    assert!(lines[1].starts_with(r#"{"seq":2,"kind":"FlagSubmitted""#));
    for (i, line) in lines.iter().enumerate() {
        let e = Event::from_line(line).unwrap();
        assert_eq!(e.seq, i as u64 + 1);
        assert_eq!(e.to_line(), *line);
    }
    // raw identities never reach the log
    assert!(!text.contains("alice") && !text.contains("bob"));
}

#[test]
fn rejected_events_are_not_logged() {
    let (mut s, buf) = logged_service();
    s.post_message("alice", "x").unwrap();
    assert!(s.flag(5, "bob", Verdict::Toxic).is_err());
    assert!(s.post_message("", "x").is_err());
    assert_eq!(buf.text().lines().count(), 1);
}

#[test]
fn storage_failure_is_fail_stop() {
    let state = PlatformState::new(ModelConfig::default(), PolicyConfig::default());
    let mut s = Service::with_log(state, EventLog::new(Box::new(FlakyDisk { ok: 1 })), key());
    s.post_message("alice", "x").unwrap();
    let before = s.hash();
    assert!(matches!(
        s.post_message("alice", "y"),
        Err(Error::Storage(_))
    ));
    assert_eq!(s.hash(), before, "an unlogged event must not be committed");
    assert!(matches!(
        s.post_message("alice", "z"),
        Err(Error::WriteRefused)
    ));
    assert!(matches!(
        s.flag(1, "bob", Verdict::Toxic),
        Err(Error::WriteRefused)
    ));
}

#[test]
fn replay_matches_live_and_is_repeatable() {
    let (mut s, buf) = logged_service();
    let a = s.post_message("alice", "first message").unwrap().message_id;
    let b = s.post_message("bob", "second message").unwrap().message_id;
    s.flag(a, "carol", Verdict::Toxic).unwrap();
    s.flag(a, "dave", Verdict::Toxic).unwrap();
    s.flag(b, "carol", Verdict::Acceptable).unwrap();
    s.label(a, "editor", Verdict::Toxic).unwrap();
    s.flag(b, "erin", Verdict::Toxic).unwrap();
    let text = buf.text();
    let replay = || {
        replay_log(
            BufReader::new(text.as_bytes()),
            ModelConfig::default(),
            PolicyConfig::default(),
        )
        .unwrap()
    };
    let r1 = replay();
    let r2 = replay();
    assert_eq!(state_hash(&r1), s.hash());
    assert_eq!(state_hash(&r1), state_hash(&r2));
    assert_eq!(&r1, s.state());
}

#[test]
fn empty_log_replays_to_initial_state() {
    let state = replay_log(
        BufReader::new(&b""[..]),
        ModelConfig::default(),
        PolicyConfig::default(),
    )
    .unwrap();
    assert_eq!(
        state_hash(&state),
        state_hash(&PlatformState::new(
            ModelConfig::default(),
            PolicyConfig::default()
        ))
    );
}

#[test]
fn corrupt_or_gapped_logs_report_line() {
    let good = r#"{"seq":1,"kind":"MessagePosted","payload":{"message_id":1,"author":"0000000000000001","text":"x"}}"#;
    let corrupt = format!("{good}\n{{not json\n");
    let err = replay_log(
        BufReader::new(corrupt.as_bytes()),
        ModelConfig::default(),
        PolicyConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Replay { line: 2, .. }), "{err}");

    let gap = format!("{good}\n{}\n", good.replace(r#""seq":1"#, r#""seq":3"#));
    let err = replay_log(
        BufReader::new(gap.as_bytes()),
        ModelConfig::default(),
        PolicyConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Replay { line: 2, .. }), "{err}");

    let invalid = r#"{"seq":1,"kind":"FlagSubmitted","payload":{"message_id":9,"flagger":"0000000000000001","verdict":1}}"#;
    let err = replay_log(
        BufReader::new(invalid.as_bytes()),
        ModelConfig::default(),
        PolicyConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Replay { line: 1, .. }));
}

#[test]
fn every_event_changes_the_hash() {
    let mut s = service();
    let mut seen = vec![s.hash()];
    let id = s.post_message("a", "x").unwrap().message_id;
    seen.push(s.hash());
    s.flag(id, "b", Verdict::Acceptable).unwrap();
    seen.push(s.hash());
    s.flag(id, "b", Verdict::Acceptable).unwrap();
    seen.push(s.hash());
    s.label(id, "e", Verdict::Acceptable).unwrap();
    seen.push(s.hash());
    s.flag(id, "c", Verdict::Toxic).unwrap();
    seen.push(s.hash());
    let unique: std::collections::HashSet<_> = seen.iter().collect();
    assert_eq!(unique.len(), seen.len());
}

#[test]
fn view_exposes_effective_flags_in_flagger_order() {
    let mut s = service();
    let id = s.post_message("a", "x").unwrap().message_id;
    for u in ["zed", "amy", "kim"] {
        s.flag(id, u, Verdict::Toxic).unwrap();
    }
    let flags = s.state().effective_flags(id);
    assert_eq!(flags.len(), 3);
    assert!(flags.windows(2).all(|w| w[0].flagger < w[1].flagger));
}

#[test]
fn metrics_counters_never_decrease() {
    let cfg = ModelConfig {
        learning_rate: 50.0,
        ..ModelConfig::default()
    };
    let mut s = Service::in_memory(cfg, PolicyConfig::default(), key());
    let mut last = s.metrics().counters();
    let mut check = |s: &Service| {
        let now = s.metrics().counters();
        assert!(
            now.iter().zip(&last).all(|(n, l)| n >= l),
            "{last:?} -> {now:?}"
        );
        last = now;
    };
    for round in 0..6u64 {
        let id = s.post_message("author", "spam buy now").unwrap().message_id;
        check(&s);
        for u in 0..4 {
            let v = if (u + round) % 4 == 0 {
                Verdict::Acceptable
            } else {
                Verdict::Toxic
            };
            s.flag(id, &format!("u{u}"), v).unwrap();
            check(&s);
        }
        let verdict = if round % 3 == 2 {
            Verdict::Acceptable
        } else {
            Verdict::Toxic
        };
        s.label(id, "editor", verdict).unwrap();
        check(&s);
        s.flag(id, "late", Verdict::Toxic).unwrap();
        check(&s);
    }
    let m = s.metrics();
    assert_eq!(m.messages, 6);
    assert_eq!(m.editorial_labels, 6);
    assert!(m.ignored_flags >= 6);
    assert!(m.removals.model_above_threshold > 0);
}

#[test]
fn file_backed_service_reopens_from_its_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = modhub_core::ServiceConfig {
        port: 0,
        data_dir: dir.path().to_path_buf(),
        anon_key_hex: "000102030405060708090a0b0c0d0e0f".into(),
        policy: PolicyConfig::default(),
        model: ModelConfig::default(),
        console_dir: None,
    };
    let hash = {
        let mut s = Service::open(&cfg).unwrap();
        let id = s.post_message("alice", "hello").unwrap().message_id;
        s.flag(id, "bob", Verdict::Toxic).unwrap();
        s.label(id, "editor", Verdict::Toxic).unwrap();
        s.hash()
    };
    let replayed =
        modhub_core::service::replay_file(&cfg.log_path(), cfg.model.clone(), cfg.policy.clone())
            .unwrap();
    assert_eq!(state_hash(&replayed), hash);
    let mut s = Service::open(&cfg).unwrap();
    assert_eq!(s.hash(), hash);
    s.post_message("carol", "again").unwrap();
    let text = std::fs::read_to_string(cfg.log_path()).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(
        Event::from_line(text.lines().last().unwrap()).unwrap().seq,
        4
    );
}
