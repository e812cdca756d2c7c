use medsentry::atoms::{EntityId, SecValue, Timestamp};
use medsentry::policy::{Action, Decision};
use medsentry::protocol::envelope::{parse_response, HEADER_BYTES};
use medsentry::protocol::{
    session_sec, Deployment, Envelope, KeyRegistry, Leg, ProtocolConfig, RejectReason, SessionError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn deployment(sensors: usize, seed: u64) -> Deployment {
    Deployment::new(KeyRegistry::provision(sensors, seed).unwrap(), ProtocolConfig::default(), seed)
}

fn readings() -> Vec<(String, String)> {
    vec![("heart_rate".into(), "71".into()), ("spo2".into(), "98".into())]
}

fn rejected(err: SessionError) -> (Leg, RejectReason) {
    match err {
        SessionError::Rejected(f) => (f.leg, f.reject.reason),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn honest_pipeline() {
    let mut d = deployment(2, 5);
    let trace = d.run_session(1, Timestamp(50_000), Action::Store, readings()).unwrap();
    let legs: Vec<Leg> = trace.envelopes.iter().map(|e| e.leg).collect();
    assert_eq!(legs, Leg::ALL.to_vec());

    let reg = &d.registry;
    let expected = session_sec(&reg.sensors()[1], &reg.bs(), &reg.is(), &reg.rs());
    assert_eq!(trace.is_sec, expected);
    assert_eq!(trace.result.sec, expected);
    assert_eq!(d.sensors[1].stored_sec(), Some(expected));
    assert_eq!(d.sensors[0].stored_sec(), None);

    assert_eq!(trace.accept.action, Action::Store);
    assert_eq!(d.rs.dataset().len(), 1);
    assert_eq!(d.rs.dataset()[0].readings, readings());
    assert_eq!(d.is.decisions().len(), 1);
    assert_eq!(d.is.decisions()[0].decision, Decision::Permit);

    assert_eq!(d.sensors[1].counters().hashes, 1);
    assert_eq!(d.bs.counters().hashes, 2);
    assert_eq!(d.is.counters().hashes, 2);
    assert_eq!(d.rs.counters().hashes, 1);
    assert_eq!((d.sensors[1].pending(), d.bs.pending(), d.is.pending()), (0, 0, 0));
}

#[test]
fn retrieve_counts_stored_records() {
    let mut d = deployment(1, 6);
    for i in 0..3 {
        d.run_session(0, Timestamp(10_000 + i * 100), Action::Store, readings()).unwrap();
    }
    let trace = d.run_session(0, Timestamp(20_000), Action::Retrieve, vec![]).unwrap();
    assert_eq!(trace.accept.records, 3);
    assert_eq!(d.rs.dataset().len(), 3);
}

#[test]
fn counters_scale_per_session() {
    let mut d = deployment(3, 8);
    for s in 0..3 {
        for k in 0..2 {
            d.run_session(s, Timestamp(1_000 * (s as u64 * 2 + k + 1)), Action::Store, readings()).unwrap();
        }
    }
    for s in &d.sensors {
        assert_eq!(s.counters().hashes, 2);
    }
    assert_eq!(d.bs.counters().hashes, 12);
}

#[test]
fn repeated_builds_use_fresh_nonces() {
    let mut d = deployment(1, 9);
    let reg = &d.registry;
    let a = d.sensors[0].build_request(reg, Timestamp(5), Action::Store, vec![]).unwrap();
    let b = d.sensors[0].build_request(reg, Timestamp(5), Action::Store, vec![]).unwrap();
    assert_ne!(a.envelope.ciphertext, b.envelope.ciphertext);
    assert_ne!(a.request_id, b.request_id);
    assert_eq!(d.sensors[0].counters().hashes, 2);
}

#[test]
fn freshness_boundary_at_window() {
    let mut d = deployment(1, 10);
    let window = d.config.freshness_window_ms;
    let reg = &d.registry;
    let req = d.sensors[0].build_request(reg, Timestamp(100_000), Action::Store, vec![]).unwrap();
    let late = d.bs.process_request(reg, &req.envelope, Timestamp(100_000 + window + 1)).unwrap_err();
    assert_eq!(late.reason, RejectReason::Freshness);
    let early = d.bs.process_request(reg, &req.envelope, Timestamp(100_000 - window - 1)).unwrap_err();
    assert_eq!(early.reason, RejectReason::Freshness);
    assert!(d.bs.process_request(reg, &req.envelope, Timestamp(100_000 + window)).is_ok());
}

#[test]
fn replayed_request_is_rejected() {
    let mut d = deployment(1, 11);
    let reg = &d.registry;
    let req = d.sensors[0].build_request(reg, Timestamp(7_000), Action::Store, vec![]).unwrap();
    let fwd = d.bs.process_request(reg, &req.envelope, Timestamp(7_010)).unwrap();
    let replay = d.bs.process_request(reg, &req.envelope, Timestamp(7_020)).unwrap_err();
    assert_eq!(replay.reason, RejectReason::Freshness);

    let (to_rs, _) = d.is.process_request(reg, &fwd, Timestamp(7_030)).unwrap();
    d.rs.process_request(reg, &to_rs, Timestamp(7_040)).unwrap();
    assert_eq!(d.rs.process_request(reg, &to_rs, Timestamp(7_050)).unwrap_err().reason, RejectReason::Freshness);
    let old = d.rs.process_request(reg, &to_rs, Timestamp(7_030 + 10_000)).unwrap_err();
    assert_eq!(old.reason, RejectReason::Freshness);
}

#[test]
fn stale_response_is_dropped() {
    let mut d = deployment(1, 12);
    let reg = &d.registry;
    let t = Timestamp(40_000);
    let req = d.sensors[0].build_request(reg, t, Action::Store, vec![]).unwrap();
    let e2 = d.bs.process_request(reg, &req.envelope, t).unwrap();
    let (e3, _) = d.is.process_request(reg, &e2, t).unwrap();
    let e4 = d.rs.process_request(reg, &e3, t).unwrap().response;
    let e5 = d.is.process_response(reg, &e4, t).unwrap();
    let (e6, to) = d.bs.process_response(reg, &e5, t).unwrap();
    assert_eq!(to, reg.sensors()[0]);
    let late = Timestamp(t.0 + d.config.freshness_window_ms + 1);
    assert_eq!(d.sensors[0].process_response(reg, &e6, late).unwrap_err().reason, RejectReason::Freshness);
    assert_eq!(d.sensors[0].stored_sec(), None);
}

#[test]
fn missing_policy_rule_rejects_with_not_applicable() {
    let reg = KeyRegistry::provision(1, 13).unwrap();
    let release = reg.default_release();
    let mut d = Deployment::with_policy(reg, ProtocolConfig::default(), 13, vec![], release);
    let (leg, reason) = rejected(d.run_session(0, Timestamp(1), Action::Store, vec![]).unwrap_err());
    assert_eq!((leg, reason), (Leg::RBs2, RejectReason::Policy));
    assert_eq!(d.is.decisions()[0].decision, Decision::NotApplicable);
    assert!(d.rs.dataset().is_empty());
}

#[test]
fn attribute_release_filters_unlisted_readings() {
    let mut d = deployment(1, 14);
    let mut r = readings();
    r.push(("diagnosis".into(), "confidential".into()));
    d.run_session(0, Timestamp(3), Action::Store, r).unwrap();
    assert_eq!(d.rs.dataset()[0].readings, readings());
}

#[test]
fn wrong_leg_and_truncation_are_malformed() {
    let mut d = deployment(1, 15);
    let reg = &d.registry;
    let req = d.sensors[0].build_request(reg, Timestamp(1), Action::Store, vec![]).unwrap();
    let mut relabeled = req.envelope.clone();
    relabeled.leg = Leg::RBs2;
    assert_eq!(d.bs.process_request(reg, &relabeled, Timestamp(1)).unwrap_err().reason, RejectReason::Malformed);
    let mut short = req.envelope.clone();
    short.ciphertext.truncate(50);
    assert_eq!(d.bs.process_request(reg, &short, Timestamp(1)).unwrap_err().reason, RejectReason::Malformed);
    let encoded = req.envelope.encode();
    assert!(Envelope::decode(&encoded[..HEADER_BYTES - 1]).is_err());
    assert_eq!(Envelope::decode(&encoded).unwrap(), req.envelope);
}

#[test]
fn unknown_sender_is_an_integrity_failure() {
    let mut d = deployment(1, 16);
    let reg = &d.registry;
    let mut env = d.sensors[0].build_request(reg, Timestamp(1), Action::Store, vec![]).unwrap().envelope;
    env.sender = EntityId([0xee; 16]);
    assert_eq!(d.bs.process_request(reg, &env, Timestamp(1)).unwrap_err().reason, RejectReason::Integrity);
}

#[test]
fn zeroing_sec_in_transit_is_detected() {
    let mut d = deployment(1, 17);
    let sec = {
        let reg = &d.registry;
        session_sec(&reg.sensors()[0], &reg.bs(), &reg.is(), &reg.rs())
    };
    let err = d
        .run_session_with(0, Timestamp(9), Action::Store, vec![], |leg, env| {
            if leg == Leg::RIs2 {
                // the Sec field sits between the signature and the timestamp
                let at = env.ciphertext.len() - 16 - 8 - 16;
                for (i, b) in env.ciphertext[at..at + 16].iter_mut().enumerate() {
                    *b ^= sec.0[i];
                }
            }
        })
        .unwrap_err();
    assert_eq!(rejected(err), (Leg::RIs2, RejectReason::Integrity));
}

#[test]
fn tampered_token_fails_sec_check() {
    let mut d = deployment(1, 18);
    let err = d
        .run_session_with(0, Timestamp(9), Action::Store, vec![], |leg, env| {
            if leg == Leg::RBs3 {
                env.ciphertext[3] ^= 0x10;
            }
        })
        .unwrap_err();
    assert_eq!(rejected(err), (Leg::RBs3, RejectReason::Integrity));
    assert_eq!(d.sensors[0].stored_sec(), None);
}

#[test]
fn response_payload_without_nonce_cannot_be_opened() {
    let mut d = deployment(1, 19);
    let trace = d.run_session(0, Timestamp(2), Action::Store, vec![]).unwrap();
    let reg = &d.registry;
    let last = &trace.envelopes[5];
    let key = reg.link(&reg.bs(), &reg.sensors()[0]).unwrap();
    let mut plain = medsentry::protocol::envelope::open(last, &reg.sensors()[0], key, d.config.rounds);
    assert!(parse_response(&plain).is_some());
    plain.drain(64..80);
    assert!(parse_response(&plain).is_none());
}

#[test]
fn single_bit_flips_are_rejected_at_next_hop() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf11b);
    let mut d = deployment(2, 20);
    let mut t = 1_000_000u64;
    for round in 0..120 {
        let target = Leg::ALL[round % 6];
        let mut flipped = None;
        t += 5_000;
        let err = d
            .run_session_with(round % 2, Timestamp(t), Action::Store, readings(), |leg, env| {
                if leg == target {
                    let bit = rng.random_range(0..env.ciphertext.len() * 8);
                    env.ciphertext[bit / 8] ^= 1 << (bit % 8);
                    flipped = Some(bit);
                }
            })
            .unwrap_err();
        let (leg, reason) = rejected(err);
        assert_eq!(leg, target, "flip at bit {flipped:?} slipped past {target}");
        assert!(matches!(reason, RejectReason::Integrity | RejectReason::Malformed), "{reason:?}");
    }
}

#[test]
fn sec_is_independent_of_sensor_order() {
    let a = EntityId([1; 16]);
    let b = EntityId([2; 16]);
    let c = EntityId([4; 16]);
    let e = EntityId([8; 16]);
    assert_eq!(session_sec(&a, &b, &c, &e), SecValue([15; 16]));
    assert_eq!(session_sec(&a, &b, &c, &e), session_sec(&e, &c, &b, &a));
}
