use std::fmt;

use serde::{Deserialize, Serialize};

use super::topology::{NodeId, NodeKind, Topology};
use super::SimError;
use crate::policy::Action;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    NodeOutage,
    Mitm,
    Impersonation,
    Rushing,
    Vampire,
    NeglectGreed,
    PacketDrop,
}

impl AttackKind {
    pub const ALL: [AttackKind; 7] = [
        AttackKind::NodeOutage,
        AttackKind::Mitm,
        AttackKind::Impersonation,
        AttackKind::Rushing,
        AttackKind::Vampire,
        AttackKind::NeglectGreed,
        AttackKind::PacketDrop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::NodeOutage => "node_outage",
            AttackKind::Mitm => "mitm",
            AttackKind::Impersonation => "impersonation",
            AttackKind::Rushing => "rushing",
            AttackKind::Vampire => "vampire",
            AttackKind::NeglectGreed => "neglect_greed",
            AttackKind::PacketDrop => "packet_drop",
        }
    }

    /// What counts as detection for one injected instance.
    pub fn signal(self) -> &'static str {
        match self {
            AttackKind::NodeOutage => "session rerouted to completion or alarm raised",
            AttackKind::Mitm => "tampered envelope rejected (integrity)",
            AttackKind::Impersonation => "forged request rejected before RS",
            AttackKind::Rushing => "altered relay rejected, unaltered relay leaks no plaintext",
            AttackKind::Vampire => "flood request rate-limited or rejected",
            AttackKind::NeglectGreed => "dropping forwarder flagged by watchdog",
            AttackKind::PacketDrop => "sender response-timeout alarm",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    /// Disable `node` at `at_ms`.
    NodeOutage { node: NodeId, at_ms: u64 },
    /// Relay `node` flips one ciphertext bit with `probability`.
    Mitm { node: NodeId, probability: f64 },
    /// `node` injects `count` forged sensor requests.
    Impersonation { node: NodeId, count: u32, start_ms: u64, interval_ms: u64 },
    /// Relay `node` logs what it forwards and alters with `alter_probability`.
    Rushing { node: NodeId, alter_probability: f64 },
    /// `node` floods BS with `count` unverifiable requests.
    Vampire {
        node: NodeId,
        count: u32,
        start_ms: u64,
        interval_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        energy_ceiling: Option<u64>,
    },
    /// Relay `node` drops others' packets with `drop_probability`.
    NeglectGreed { node: NodeId, drop_probability: f64 },
    /// Transmissions from `from` to `to` are lost with `probability`.
    PacketDrop { from: NodeId, to: NodeId, probability: f64 },
}

impl AttackSpec {
    pub fn kind(&self) -> AttackKind {
        match self {
            AttackSpec::NodeOutage { .. } => AttackKind::NodeOutage,
            AttackSpec::Mitm { .. } => AttackKind::Mitm,
            AttackSpec::Impersonation { .. } => AttackKind::Impersonation,
            AttackSpec::Rushing { .. } => AttackKind::Rushing,
            AttackSpec::Vampire { .. } => AttackKind::Vampire,
            AttackSpec::NeglectGreed { .. } => AttackKind::NeglectGreed,
            AttackSpec::PacketDrop { .. } => AttackKind::PacketDrop,
        }
    }

    fn validate(&self, topo: &Topology, i: usize) -> Result<(), SimError> {
        let field = |name: &str, msg: String| SimError::Config(format!("attacks[{i}].{name}: {msg}"));
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(field(name, format!("{p} is not a probability")))
            }
        };
        let kind_of = |name: &str, node: NodeId, allowed: &[NodeKind]| match topo.kind(node) {
            Some(k) if allowed.contains(&k) => Ok(()),
            Some(k) => Err(field(name, format!("node {node} is a {k:?}, expected one of {allowed:?}"))),
            None => Err(field(name, format!("unknown node {node}"))),
        };
        let positive = |name: &str, v: u64| if v > 0 { Ok(()) } else { Err(field(name, "must be positive".into())) };
        match *self {
            AttackSpec::NodeOutage { node, .. } => kind_of("node", node, &[NodeKind::ClusterHead]),
            AttackSpec::Mitm { node, probability } => {
                kind_of("node", node, &[NodeKind::Adversary])?;
                prob("probability", probability)
            }
            AttackSpec::Impersonation { node, interval_ms, .. } => {
                kind_of("node", node, &[NodeKind::Adversary])?;
                positive("interval_ms", interval_ms)
            }
            AttackSpec::Rushing { node, alter_probability } => {
                kind_of("node", node, &[NodeKind::Adversary])?;
                prob("alter_probability", alter_probability)
            }
            AttackSpec::Vampire { node, interval_ms, .. } => {
                kind_of("node", node, &[NodeKind::Adversary])?;
                positive("interval_ms", interval_ms)
            }
            AttackSpec::NeglectGreed { node, drop_probability } => {
                kind_of("node", node, &[NodeKind::Adversary, NodeKind::ClusterHead])?;
                prob("drop_probability", drop_probability)
            }
            AttackSpec::PacketDrop { from, to, probability } => {
                if topo.latency(from, to).is_none() {
                    return Err(field("from", format!("no link {from}-{to}")));
                }
                prob("probability", probability)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyParams {
    pub send: u64,
    pub receive: u64,
    pub sign_verify: u64,
    pub encrypt_decrypt: u64,
    pub sensor_capacity: u64,
    pub relay_capacity: u64,
    pub server_capacity: u64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            send: 2,
            receive: 1,
            sign_verify: 5,
            encrypt_decrypt: 3,
            sensor_capacity: 1_000_000,
            relay_capacity: 10_000_000,
            server_capacity: 1_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateLimit {
    pub per_second: u64,
    pub burst: u64,
}

impl Default for RateLimit {
    fn default() -> Self {
        RateLimit { per_second: 5, burst: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Watchdog {
    pub window: usize,
    pub threshold: f64,
}

impl Default for Watchdog {
    fn default() -> Self {
        Watchdog { window: 20, threshold: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Workload {
    pub sessions_per_sensor: u32,
    pub start_ms: u64,
    pub interval_ms: u64,
    /// Offset between consecutive sensors' schedules.
    pub stagger_ms: u64,
    pub action: Action,
}

impl Default for Workload {
    fn default() -> Self {
        Workload { sessions_per_sensor: 1, start_ms: 1_000, interval_ms: 1_000, stagger_ms: 7, action: Action::Store }
    }
}

/// Conditions `cmd_run` checks after the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expectations {
    pub all_attacks_detected: bool,
    pub min_completion: f64,
    /// Zero rejections and alarms; defaults to true for attack-free scenarios.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_rejections: Option<bool>,
}

impl Default for Expectations {
    fn default() -> Self {
        Expectations { all_attacks_detected: true, min_completion: 0.0, no_rejections: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub name: String,
    pub seed: u64,
    pub topology: Topology,
    #[serde(default = "default_window")]
    pub freshness_window_ms: u64,
    #[serde(default = "default_timeout")]
    pub response_timeout_ms: u64,
    #[serde(default = "default_tick")]
    pub clock_granularity_ms: u64,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub rate_limit: RateLimit,
    #[serde(default)]
    pub watchdog: Watchdog,
    #[serde(default)]
    pub workload: Workload,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub expect: Expectations,
    /// Provisioned directory to run against, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keystore: Option<String>,
}

fn default_window() -> u64 {
    2_000
}

fn default_timeout() -> u64 {
    5_000
}

fn default_tick() -> u64 {
    1
}

impl SimConfig {
    pub fn honest(name: &str, seed: u64, topology: Topology, sessions_per_sensor: u32) -> Self {
        SimConfig {
            name: name.into(),
            seed,
            topology,
            freshness_window_ms: default_window(),
            response_timeout_ms: default_timeout(),
            clock_granularity_ms: default_tick(),
            energy: EnergyParams::default(),
            rate_limit: RateLimit::default(),
            watchdog: Watchdog::default(),
            workload: Workload { sessions_per_sensor, ..Workload::default() },
            attacks: Vec::new(),
            expect: Expectations::default(),
            keystore: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.topology.validate()?;
        if self.clock_granularity_ms == 0 {
            return Err(SimError::Config("clock_granularity_ms: must be positive".into()));
        }
        if self.response_timeout_ms == 0 {
            return Err(SimError::Config("response_timeout_ms: must be positive".into()));
        }
        if self.rate_limit.per_second == 0 || self.rate_limit.burst == 0 {
            return Err(SimError::Config("rate_limit: per_second and burst must be positive".into()));
        }
        if self.watchdog.window == 0 || !(0.0..=1.0).contains(&self.watchdog.threshold) {
            return Err(SimError::Config("watchdog: window must be positive and threshold in [0, 1]".into()));
        }
        if self.workload.interval_ms == 0 {
            return Err(SimError::Config("workload.interval_ms: must be positive".into()));
        }
        for (i, a) in self.attacks.iter().enumerate() {
            a.validate(&self.topology, i)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| SimError::Config(format!("scenario: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
