use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::AttackKind;
use super::topology::NodeId;
use crate::protocol::OpCounters;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackTally {
    pub injected: u64,
    pub detected: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEnergy {
    pub capacity: u64,
    pub consumed: u64,
    pub sends: u64,
    pub receives: u64,
    pub sign_verify: u64,
    pub encrypt_decrypt: u64,
    pub halted: bool,
}

impl NodeEnergy {
    pub fn remaining(&self) -> u64 {
        self.capacity - self.consumed
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub run_id: String,
    /// Sessions started by honest sensors.
    pub sessions: u64,
    pub completed: u64,
    pub alarms: u64,
    /// Envelopes emitted by any node, and their fates.
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub rejected: BTreeMap<String, u64>,
    pub envelopes_by_leg: BTreeMap<String, u64>,
    /// Envelopes belonging to sessions that completed.
    pub session_envelopes: u64,
    pub wire_bytes: u64,
    pub attacks: BTreeMap<AttackKind, AttackTally>,
    pub energy: BTreeMap<NodeId, NodeEnergy>,
    pub counters: BTreeMap<String, OpCounters>,
    pub flagged: Vec<NodeId>,
    pub forged_reached_rs: u64,
    pub plaintext_leaks: u64,
    pub bs_adversarial_energy: u64,
    pub vampire_ceiling: Option<u64>,
    pub trace: Vec<String>,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "run_id",
    "sessions",
    "delivered",
    "rejected_integrity",
    "rejected_freshness",
    "rejected_policy",
    "attacks_detected",
    "energy_total",
];

impl Metrics {
    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    pub fn rejected_for(&self, reason: &str) -> u64 {
        self.rejected.get(reason).copied().unwrap_or(0)
    }

    pub fn attacks_injected(&self) -> u64 {
        self.attacks.values().map(|t| t.injected).sum()
    }

    pub fn attacks_detected(&self) -> u64 {
        self.attacks.values().map(|t| t.detected).sum()
    }

    /// Energy spent by every non-adversary node.
    pub fn energy_total(&self) -> u64 {
        self.energy.values().map(|e| e.consumed).sum()
    }

    pub fn completion_ratio(&self) -> f64 {
        if self.sessions == 0 {
            1.0
        } else {
            self.completed as f64 / self.sessions as f64
        }
    }

    pub fn csv_header() -> Vec<String> {
        let mut cols: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend(
            ["completed", "alarms", "sent", "dropped", "rejected_other", "hashes_sensor", "hashes_bs", "envelopes", "wire_bits"]
                .map(String::from),
        );
        for kind in AttackKind::ALL {
            cols.push(format!("injected_{kind}"));
            cols.push(format!("detected_{kind}"));
        }
        cols
    }

    pub fn csv_row(&self) -> Vec<String> {
        let hashes = |role: &str| self.counters.get(role).map(|c| c.hashes).unwrap_or(0);
        let known = self.rejected_for("integrity") + self.rejected_for("freshness") + self.rejected_for("policy");
        let mut row = vec![
            self.run_id.clone(),
            self.sessions.to_string(),
            self.delivered.to_string(),
            self.rejected_for("integrity").to_string(),
            self.rejected_for("freshness").to_string(),
            self.rejected_for("policy").to_string(),
            self.attacks_detected().to_string(),
            self.energy_total().to_string(),
            self.completed.to_string(),
            self.alarms.to_string(),
            self.sent.to_string(),
            self.dropped.to_string(),
            (self.rejected_total() - known).to_string(),
            hashes("sensor").to_string(),
            hashes("bs").to_string(),
            self.session_envelopes.to_string(),
            (self.wire_bytes * 8).to_string(),
        ];
        for kind in AttackKind::ALL {
            let t = self.attacks.get(&kind).copied().unwrap_or_default();
            row.push(t.injected.to_string());
            row.push(t.detected.to_string());
        }
        row
    }
}
