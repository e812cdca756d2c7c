//! Discrete-event network simulation of the protocol under attack.

pub mod config;
mod engine;
pub mod metrics;
pub mod presets;
pub mod topology;

use thiserror::Error;

use crate::protocol::ProtocolError;
use topology::NodeId;

pub use config::{AttackKind, AttackSpec, SimConfig};
pub use engine::{forge_request, run, run_provisioned, run_with, Provisioned, RunOutput};
pub use metrics::Metrics;
pub use topology::{NodeKind, Topology};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("no route from node {src} to node {dst}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Scenario expectations that the run did not meet.
pub fn unmet_expectations(cfg: &SimConfig, m: &Metrics) -> Vec<String> {
    let mut out = Vec::new();
    let e = &cfg.expect;
    if e.all_attacks_detected {
        for (kind, t) in &m.attacks {
            if t.detected < t.injected {
                out.push(format!("{kind}: {} of {} instances detected", t.detected, t.injected));
            }
        }
    }
    if m.completion_ratio() < e.min_completion {
        out.push(format!("completion {:.3} below {:.3}", m.completion_ratio(), e.min_completion));
    }
    if e.no_rejections.unwrap_or(cfg.attacks.is_empty()) && (m.rejected_total() > 0 || m.alarms > 0) {
        out.push(format!("{} rejections and {} alarms in a run expected to be clean", m.rejected_total(), m.alarms));
    }
    if m.forged_reached_rs > 0 {
        out.push(format!("{} forged requests reached the repository", m.forged_reached_rs));
    }
    if m.plaintext_leaks > 0 {
        out.push(format!("{} relayed envelopes exposed plaintext", m.plaintext_leaks));
    }
    if let Some(ceiling) = m.vampire_ceiling {
        if m.bs_adversarial_energy > ceiling {
            out.push(format!("flood cost the base station {} > ceiling {ceiling}", m.bs_adversarial_energy));
        }
    }
    out
}
