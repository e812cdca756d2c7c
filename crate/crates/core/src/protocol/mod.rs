//! The six-message authorization exchange between sensor, base station,
//! information server and repository server.

mod entities;
pub mod envelope;
mod registry;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{expand_to, xor_in_place, EntityId, SecValue, Timestamp, Vtm};
use crate::cipher::RoundConfig;
use crate::policy::Decision;
use crate::sign::SIGNATURE_BYTES;

pub use entities::{
    build_response, BaseStation, DecisionRecord, InfoServer, PatientRecord, RepoServer, RsAccept, Sensor, SensorRequest,
    SessionResult,
};
pub use envelope::{Envelope, EnvelopeError, Leg};
pub use registry::{EntityKeys, KeyRegistry, Role};
pub use session::{Deployment, SessionError, SessionFailure, SessionTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub freshness_window_ms: u64,
    pub rounds: RoundConfig,
    /// Pending sessions older than this are forgotten.
    pub session_ttl_ms: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { freshness_window_ms: 2000, rounds: RoundConfig::Ten, session_ttl_ms: 30_000 }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("entity {0} is not provisioned")]
    UnknownEntity(EntityId),
    #[error("no pairwise key between {0} and {1}")]
    MissingLink(EntityId, EntityId),
    #[error("provisioning: {0}")]
    Provisioning(String),
    #[error(transparent)]
    Share(#[from] crate::sharing::ShareError),
    #[error(transparent)]
    Sign(#[from] crate::sign::SignError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Integrity,
    Freshness,
    Malformed,
    Policy,
    Provisioning,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::Integrity => "integrity",
            RejectReason::Freshness => "freshness",
            RejectReason::Malformed => "malformed",
            RejectReason::Policy => "policy",
            RejectReason::Provisioning => "provisioning",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reject {
    pub reason: RejectReason,
    pub detail: String,
    pub decision: Option<Decision>,
}

impl Reject {
    pub fn new(reason: RejectReason, detail: impl Into<String>) -> Self {
        Self { reason, detail: detail.into(), decision: None }
    }

    pub(crate) fn integrity(detail: impl Into<String>) -> Self {
        Self::new(RejectReason::Integrity, detail)
    }

    pub(crate) fn freshness(detail: impl Into<String>) -> Self {
        Self::new(RejectReason::Freshness, detail)
    }

    pub(crate) fn malformed(detail: impl Into<String>) -> Self {
        Self::new(RejectReason::Malformed, detail)
    }
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason.name(), self.detail)
    }
}

impl From<ProtocolError> for Reject {
    fn from(e: ProtocolError) -> Self {
        Reject::new(RejectReason::Provisioning, e.to_string())
    }
}

/// Per-entity instrumentation. `hashes` counts message digests computed
/// for signing or verification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub hashes: u64,
    pub signs: u64,
    pub verifies: u64,
    pub encryptions: u64,
    pub decryptions: u64,
}

impl OpCounters {
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            hashes: self.hashes - earlier.hashes,
            signs: self.signs - earlier.signs,
            verifies: self.verifies - earlier.verifies,
            encryptions: self.encryptions - earlier.encryptions,
            decryptions: self.decryptions - earlier.decryptions,
        }
    }
}

/// `sig ^ expand(recipient) ^ expand(ts)`.
pub fn compute_vtm(sig: &[u8; SIGNATURE_BYTES], recipient: &EntityId, ts: Timestamp) -> Vtm {
    let mut v = *sig;
    xor_in_place(&mut v, &expand_to::<64>(&recipient.0).unwrap());
    xor_in_place(&mut v, &expand_to::<64>(&ts.to_bytes()).unwrap());
    Vtm(v)
}

pub fn session_sec(sensor: &EntityId, bs: &EntityId, is: &EntityId, rs: &EntityId) -> SecValue {
    SecValue::of(&[*sensor, *bs, *is, *rs])
}

pub fn is_fresh(ts: Timestamp, now: Timestamp, window_ms: u64) -> bool {
    ts.abs_diff(now) <= window_ms
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vtm_unmasks() {
        let sig = [0x77u8; 64];
        let id = EntityId([0x10; 16]);
        let v = compute_vtm(&sig, &id, Timestamp(12345));
        let mut back = v.0;
        xor_in_place(&mut back, &expand_to::<64>(&id.0).unwrap());
        xor_in_place(&mut back, &expand_to::<64>(&Timestamp(12345).to_bytes()).unwrap());
        assert_eq!(back, sig);
    }

    #[test]
    fn equal_ids_cancel() {
        let id = EntityId([0xc3; 16]);
        assert_eq!(session_sec(&id, &id, &id, &id), SecValue([0; 16]));
    }

    #[test]
    fn freshness_boundary() {
        let now = Timestamp(10_000);
        assert!(is_fresh(Timestamp(8_000), now, 2000));
        assert!(!is_fresh(Timestamp(7_999), now, 2000));
        assert!(is_fresh(Timestamp(12_000), now, 2000));
        assert!(!is_fresh(Timestamp(12_001), now, 2000));
    }
}
