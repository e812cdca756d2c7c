//! Signed authorization for health sensor networks.
//!
//! A sensor asks a base station (BS) to store or fetch readings; the BS
//! forwards to an information server (IS) that checks policy, which in turn
//! talks to the repository server (RS). Six envelopes make one session, each
//! signed with ECDSA P-256 over a Lesamnta-LW-256 digest and sealed with
//! AES-192 in CTR mode. [`netsim`] replays sessions over a sensor field with
//! adversaries in it; [`harness`] is the command line and file store behind
//! the `medsentry` binary.
//!
//! Runnable examples, one per capability:
//!
//! - `lesamnta_digest`: hashing, one-shot and streaming
//! - `ecdsa_llw_sign`: signing, verification, tampering
//! - `aes_round_variants`: 12 versus 10 rounds
//! - `shamir_threshold`: 3-of-5 split and recovery
//! - `policy_decisions`: rule evaluation with a daily budget
//! - `honest_session`: one full six-envelope session
//! - `attack_matrix`: every attack preset through the simulator
//! - `benchmarks`: primitive timings as CSV

pub mod atoms;
pub mod cipher;
pub mod hash;
pub mod policy;
pub mod sharing;
pub mod sign;
pub mod protocol;
pub mod netsim;
pub mod harness;
