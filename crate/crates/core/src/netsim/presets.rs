//! Ready-made scenarios, one per attack plus an honest baseline.

use super::config::{AttackKind, AttackSpec, Expectations, SimConfig};
use super::topology::{NodeId, NodeKind, Topology};

/// Id used for the adversary node in every preset.
pub const ADVERSARY: NodeId = 50;

pub fn honest(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::honest("honest", seed, Topology::standard(10, 2), 5);
    cfg.expect = Expectations { min_completion: 1.0, no_rejections: Some(true), ..Expectations::default() };
    cfg
}

/// Adversary spliced between the first cluster head and the base station.
fn on_path(sensors: usize, heads: usize, latency: u64) -> Topology {
    let mut t = Topology::standard(sensors, heads);
    t.add_node(ADVERSARY, NodeKind::Adversary);
    t.remove_link(10, 1);
    t.add_link(10, ADVERSARY, latency);
    t.add_link(ADVERSARY, 1, latency);
    t
}

/// Adversary hanging off the first cluster head.
fn attached(sensors: usize, heads: usize) -> Topology {
    let mut t = Topology::standard(sensors, heads);
    t.add_node(ADVERSARY, NodeKind::Adversary);
    t.add_link(ADVERSARY, 10, 1);
    t
}

fn scenario(kind: AttackKind, seed: u64, topology: Topology, sessions: u32, attack: AttackSpec) -> SimConfig {
    let mut cfg = SimConfig::honest(kind.name(), seed, topology, sessions);
    cfg.attacks.push(attack);
    cfg
}

pub fn node_outage(seed: u64) -> SimConfig {
    let mut cfg = scenario(
        AttackKind::NodeOutage,
        seed,
        Topology::standard(20, 2),
        12,
        AttackSpec::NodeOutage { node: 10, at_ms: 500 },
    );
    cfg.expect.min_completion = 0.9;
    cfg
}

pub fn mitm(seed: u64) -> SimConfig {
    scenario(AttackKind::Mitm, seed, on_path(20, 1, 2), 10, AttackSpec::Mitm { node: ADVERSARY, probability: 1.0 })
}

pub fn impersonation(seed: u64) -> SimConfig {
    let mut cfg = scenario(
        AttackKind::Impersonation,
        seed,
        attached(5, 2),
        8,
        AttackSpec::Impersonation { node: ADVERSARY, count: 150, start_ms: 1_000, interval_ms: 250 },
    );
    cfg.expect.min_completion = 1.0;
    cfg
}

/// The adversary offers a faster path than the honest cluster-head uplink.
pub fn rushing(seed: u64) -> SimConfig {
    let mut t = Topology::standard(10, 1);
    t.add_node(ADVERSARY, NodeKind::Adversary);
    t.add_link(10, ADVERSARY, 1);
    t.add_link(ADVERSARY, 1, 1);
    scenario(AttackKind::Rushing, seed, t, 10, AttackSpec::Rushing { node: ADVERSARY, alter_probability: 0.5 })
}

/// Flood at 100 times the per-sensor honest request rate.
pub fn vampire(seed: u64) -> SimConfig {
    let mut cfg = scenario(
        AttackKind::Vampire,
        seed,
        attached(10, 2),
        10,
        AttackSpec::Vampire { node: ADVERSARY, count: 1_000, start_ms: 1_000, interval_ms: 10, energy_ceiling: None },
    );
    cfg.expect.min_completion = 0.95;
    cfg
}

/// Every other cluster head drops most of what it should forward.
pub fn neglect_greed(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::honest(AttackKind::NeglectGreed.name(), seed, Topology::standard(32, 16), 15);
    for head in (10..26).step_by(2) {
        cfg.attacks.push(AttackSpec::NeglectGreed { node: head, drop_probability: 0.8 });
    }
    cfg
}

pub fn packet_drop(seed: u64) -> SimConfig {
    scenario(
        AttackKind::PacketDrop,
        seed,
        Topology::standard(10, 2),
        10,
        AttackSpec::PacketDrop { from: 1, to: 2, probability: 1.0 },
    )
}

pub fn for_kind(kind: AttackKind, seed: u64) -> SimConfig {
    match kind {
        AttackKind::NodeOutage => node_outage(seed),
        AttackKind::Mitm => mitm(seed),
        AttackKind::Impersonation => impersonation(seed),
        AttackKind::Rushing => rushing(seed),
        AttackKind::Vampire => vampire(seed),
        AttackKind::NeglectGreed => neglect_greed(seed),
        AttackKind::PacketDrop => packet_drop(seed),
    }
}

/// The honest baseline followed by one scenario per attack kind.
pub fn suite(seed: u64) -> Vec<SimConfig> {
    let mut v = vec![honest(seed)];
    v.extend(AttackKind::ALL.iter().map(|k| for_kind(*k, seed)));
    v
}
