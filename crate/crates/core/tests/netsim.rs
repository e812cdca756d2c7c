use std::collections::BTreeSet;

use medsentry::netsim::config::{AttackKind, AttackSpec};
use medsentry::netsim::metrics::Metrics;
use medsentry::netsim::topology::{NodeId, NodeKind, Topology};
use medsentry::netsim::{presets, run, run_with, unmet_expectations, SimConfig, SimError};
use medsentry::protocol::KeyRegistry;
use proptest::prelude::*;

fn check_accounting(cfg: &SimConfig, m: &Metrics) {
    assert_eq!(m.delivered + m.dropped + m.rejected_total(), m.sent, "{}", cfg.name);
    let p = &cfg.energy;
    for (node, e) in &m.energy {
        let expected = e.sends * p.send + e.receives * p.receive + e.sign_verify * p.sign_verify + e.encrypt_decrypt * p.encrypt_decrypt;
        assert_eq!(e.consumed, expected, "{} node {node}", cfg.name);
        assert!(e.consumed <= e.capacity);
    }
}

#[test]
fn single_honest_session() {
    let m = run(&SimConfig::honest("one", 1, Topology::standard(1, 1), 1)).unwrap();
    assert_eq!((m.sessions, m.completed, m.attacks_injected()), (1, 1, 0));
}

#[test]
fn ten_sensors_sixty_envelopes() {
    let cfg = SimConfig::honest("ten", 2, Topology::standard(10, 2), 1);
    let m = run(&cfg).unwrap();
    assert_eq!(m.completed, 10);
    assert_eq!(m.session_envelopes, 60);
    assert_eq!(m.sent, 60);
    assert_eq!(m.envelopes_by_leg.len(), 6);
    assert!(m.envelopes_by_leg.values().all(|n| *n == 10));
    assert_eq!(m.counters["sensor"].hashes, 10);
    assert_eq!(m.counters["bs"].hashes, 20);
    assert!(unmet_expectations(&cfg, &m).is_empty());
    check_accounting(&cfg, &m);
}

#[test]
fn runs_are_reproducible() {
    let cfg = presets::rushing(9);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.csv_row(), b.csv_row());
    let c = run(&presets::rushing(10)).unwrap();
    assert_ne!(a.attacks, c.attacks);
}

#[test]
fn presets_meet_their_expectations() {
    for cfg in presets::suite(3) {
        let m = run(&cfg).unwrap();
        check_accounting(&cfg, &m);
        assert_eq!(unmet_expectations(&cfg, &m), Vec::<String>::new(), "{}", cfg.name);
        for kind in cfg.attacks.iter().map(AttackSpec::kind) {
            assert!(m.attacks[&kind].injected >= 100, "{kind}: {:?}", m.attacks[&kind]);
        }
    }
}

#[test]
fn mitm_rejections_are_integrity_failures() {
    let m = run(&presets::mitm(4)).unwrap();
    assert_eq!(m.rejected_for("integrity"), 200);
    assert_eq!(m.rejected_total(), 200);
    assert_eq!(m.attacks[&AttackKind::Mitm].detected, 200);
}

#[test]
fn forged_requests_never_reach_the_repository() {
    let m = run(&presets::impersonation(5)).unwrap();
    assert_eq!(m.forged_reached_rs, 0);
    assert_eq!(m.rejected_total(), 150);
    assert_eq!(m.completed, m.sessions);
}

#[test]
fn rushing_relay_sees_only_ciphertext() {
    let m = run(&presets::rushing(6)).unwrap();
    assert_eq!(m.plaintext_leaks, 0);
    assert!(m.completed > 0 && m.alarms > 0);
    assert_eq!(m.completed + m.alarms, m.sessions);
}

#[test]
fn vampire_flood_is_capped() {
    let cfg = presets::vampire(7);
    let m = run(&cfg).unwrap();
    let ceiling = m.vampire_ceiling.unwrap();
    assert!(m.bs_adversarial_energy <= ceiling, "{} > {ceiling}", m.bs_adversarial_energy);
    assert!(m.rejected_for("rate_limit") >= 900);
    assert!(m.completion_ratio() >= 0.95);
}

#[test]
fn greedy_heads_are_flagged_and_bypassed() {
    let cfg = presets::neglect_greed(8);
    let m = run(&cfg).unwrap();
    let greedy: Vec<NodeId> = (10..26).step_by(2).collect();
    assert_eq!(m.flagged, greedy);
    assert!(m.completed > m.sessions / 2);
}

#[test]
fn dropped_sessions_raise_one_alarm_each() {
    let m = run(&presets::packet_drop(9)).unwrap();
    assert_eq!(m.alarms, m.sessions);
    assert_eq!(m.dropped, m.sessions);
    assert_eq!(m.attacks[&AttackKind::PacketDrop].injected, m.sessions);
}

#[test]
fn outage_reroutes_through_backup_head() {
    let cfg = presets::node_outage(10);
    let m = run(&cfg).unwrap();
    assert_eq!(m.completed, m.sessions);
    assert_eq!(m.energy[&10].consumed, 0);
}

#[test]
fn outage_without_backup_fails_visibly() {
    let mut cfg = SimConfig::honest("isolated", 11, Topology::standard(4, 1), 3);
    cfg.attacks.push(AttackSpec::NodeOutage { node: 10, at_ms: 1_500 });
    let m = run(&cfg).unwrap();
    assert!(m.completed > 0 && m.alarms > 0);
    assert_eq!(m.completed + m.alarms, m.sessions);
    let t = m.attacks[&AttackKind::NodeOutage];
    assert_eq!(t.detected, t.injected);
}

#[test]
fn drained_sensor_halts_without_overdraft() {
    let mut cfg = SimConfig::honest("drain", 12, Topology::standard(2, 1), 20);
    cfg.topology.nodes.iter_mut().find(|n| n.id == 100).unwrap().energy = Some(100);
    let m = run(&cfg).unwrap();
    let e = m.energy[&100];
    assert!(e.halted);
    assert!(e.consumed <= 100);
    assert!(m.completed < m.sessions || m.sessions < 40);
    check_accounting(&cfg, &m);
}

#[test]
fn trace_lines_are_optional() {
    let cfg = SimConfig::honest("trace", 13, Topology::standard(1, 1), 1);
    let reg = KeyRegistry::provision(1, 13).unwrap();
    let (p, r) = (reg.default_policy(), reg.default_release());
    let traced = run_with(&cfg, reg, p, r, true).unwrap();
    assert!(traced.trace.iter().any(|l| l.contains("\taccept\t")));
    assert!(run(&cfg).unwrap().trace.is_empty());
}

#[test]
fn scenario_errors_name_the_field() {
    let cfg = presets::mitm(1);
    let mut v = serde_json::to_value(&cfg).unwrap();
    v["attacks"][0]["probability"] = serde_json::json!(1.5);
    let err = SimConfig::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("attacks[0].probability"), "{err}");

    v["attacks"][0]["flip_rate"] = serde_json::json!(1);
    let err = SimConfig::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("flip_rate"), "{err}");

    let round = SimConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(round, cfg);
}

#[test]
fn disconnected_topology_is_rejected() {
    let mut t = Topology::standard(2, 1);
    t.remove_link(10, 1);
    assert!(matches!(run(&SimConfig::honest("cut", 1, t, 1)), Err(SimError::Config(m)) if m.contains("disconnected")));
}

/// Every simple path whose interior nodes may relay, cheapest first with
/// ties broken by node-id sequence.
fn brute_force(t: &Topology, src: NodeId, dst: NodeId, excluded: &BTreeSet<NodeId>) -> Option<Vec<NodeId>> {
    fn walk(t: &Topology, path: &mut Vec<NodeId>, cost: u64, dst: NodeId, ex: &BTreeSet<NodeId>, best: &mut Option<(u64, Vec<NodeId>)>) {
        let here = *path.last().unwrap();
        if here == dst {
            let cand = (cost, path.clone());
            if best.as_ref().is_none_or(|b| cand < *b) {
                *best = Some(cand);
            }
            return;
        }
        if path.len() > 1 && !t.kind(here).unwrap().relays() {
            return;
        }
        for n in &t.nodes {
            if path.contains(&n.id) || ex.contains(&n.id) {
                continue;
            }
            if let Some(lat) = t.latency(here, n.id) {
                path.push(n.id);
                walk(t, path, cost + lat, dst, ex, best);
                path.pop();
            }
        }
    }
    let mut best = None;
    if !excluded.contains(&dst) {
        walk(t, &mut vec![src], 0, dst, excluded, &mut best);
    }
    best.map(|(_, p)| p)
}

fn small_topology() -> impl Strategy<Value = Topology> {
    let kinds = prop::sample::select(vec![NodeKind::Sensor, NodeKind::ClusterHead, NodeKind::Adversary, NodeKind::BaseStation]);
    (prop::collection::vec(kinds, 3..=8), prop::collection::vec((0u32..8, 0u32..8, 1u64..4), 4..20)).prop_map(|(kinds, edges)| {
        let n = kinds.len() as u32;
        let mut t = Topology { nodes: vec![], links: vec![] };
        for (i, k) in kinds.into_iter().enumerate() {
            t.add_node(i as NodeId, k);
        }
        for (a, b, lat) in edges {
            let (a, b) = (a % n, b % n);
            if a != b && t.latency(a, b).is_none() {
                t.add_link(a, b, lat);
            }
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dijkstra_matches_path_enumeration(t in small_topology(), src in 0u32..8, dst in 0u32..8, drop in 0u32..8) {
        let n = t.nodes.len() as u32;
        let (src, dst, drop) = (src % n, dst % n, drop % n);
        prop_assume!(src != dst);
        for excluded in [BTreeSet::new(), [drop].into_iter().filter(|d| *d != src).collect()] {
            let expected = brute_force(&t, src, dst, &excluded);
            let got = t.route(src, dst, &excluded).ok();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn small_honest_runs_account_for_every_envelope(seed in any::<u64>(), sensors in 1usize..4, heads in 1usize..3) {
        let cfg = SimConfig::honest("prop", seed, Topology::standard(sensors, heads), 2);
        let m = run(&cfg).unwrap();
        check_accounting(&cfg, &m);
        prop_assert_eq!(m.completed, m.sessions);
        prop_assert_eq!(m.rejected_total(), 0);
    }
}
