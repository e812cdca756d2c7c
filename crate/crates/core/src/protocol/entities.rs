use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::envelope::{open, parse_response, recover_sec, response_plaintext, seal, token_tar};
use super::registry::{KeyRegistry, Role};
use super::{
    compute_vtm, is_fresh, session_sec, Envelope, Leg, OpCounters, ProtocolConfig, ProtocolError, Reject,
    RejectReason,
};
use crate::atoms::{EntityId, Nonce, RequestId, SecValue, Timestamp, Vtm};
use crate::hash::HashAlg;
use crate::policy::{
    binding_bytes, create_request, evaluate, parse_request, serialize_request, AccessCounter, AccessQuery, Action,
    AttributeRelease, Decision, PolicyRule, RequestIdSource, SamlRequest,
};
use crate::sign::{sign, verify, SignatureRS, SIGNATURE_BYTES};

type Sig = [u8; SIGNATURE_BYTES];

/// Randomness, timestamps and instrumentation shared by every entity.
struct Core {
    id: EntityId,
    config: ProtocolConfig,
    rng: ChaCha20Rng,
    issued_nonces: BTreeSet<Nonce>,
    last_ts: Timestamp,
    counters: OpCounters,
    /// Request ids already accepted, with their timestamps.
    seen: BTreeMap<RequestId, Timestamp>,
}

impl Core {
    fn new(id: EntityId, config: ProtocolConfig, seed: u64) -> Self {
        let mut s = [0u8; 32];
        s[..16].copy_from_slice(&id.0);
        s[16..24].copy_from_slice(&seed.to_be_bytes());
        Core {
            id,
            config,
            rng: ChaCha20Rng::from_seed(s),
            issued_nonces: BTreeSet::new(),
            last_ts: Timestamp(0),
            counters: OpCounters::default(),
            seen: BTreeMap::new(),
        }
    }

    fn timestamp(&mut self, now: Timestamp) -> Timestamp {
        self.last_ts = self.last_ts.max(now);
        self.last_ts
    }

    fn nonce(&mut self) -> Nonce {
        loop {
            let mut b = [0u8; 16];
            self.rng.fill_bytes(&mut b);
            if self.issued_nonces.insert(Nonce(b)) {
                return Nonce(b);
            }
        }
    }

    fn iv(&mut self) -> [u8; 16] {
        let mut iv = [0u8; 16];
        self.rng.fill_bytes(&mut iv);
        iv
    }

    fn sign(&mut self, reg: &KeyRegistry, message: &[u8]) -> Result<Sig, ProtocolError> {
        let keys = reg.keys(&self.id)?;
        self.counters.hashes += 1;
        self.counters.signs += 1;
        Ok(sign(&reg.curve, &keys.keypair.private, message, HashAlg::Llw256)?.to_bytes())
    }

    fn verify(&mut self, reg: &KeyRegistry, signer: &EntityId, message: &[u8], sig: &Sig) -> Result<bool, ProtocolError> {
        let public = reg.public_key(signer)?;
        self.counters.hashes += 1;
        self.counters.verifies += 1;
        Ok(verify(&reg.curve, public, message, &SignatureRS::from_bytes(sig), HashAlg::Llw256)?)
    }

    fn seal(
        &mut self,
        reg: &KeyRegistry,
        leg: Leg,
        recipient: &EntityId,
        plaintext: &[u8],
    ) -> Result<Envelope, ProtocolError> {
        let key = reg.link(&self.id, recipient)?;
        let iv = self.iv();
        self.counters.encryptions += 1;
        Ok(seal(leg, self.id, recipient, key, self.config.rounds, iv, plaintext))
    }

    fn open(&mut self, reg: &KeyRegistry, env: &Envelope) -> Result<Vec<u8>, ProtocolError> {
        let key = reg.link(&self.id, &env.sender)?;
        self.counters.decryptions += 1;
        Ok(open(env, &self.id, key, self.config.rounds))
    }

    fn check_fresh(&self, ts: Timestamp, now: Timestamp) -> Result<(), Reject> {
        if is_fresh(ts, now, self.config.freshness_window_ms) {
            Ok(())
        } else {
            Err(Reject::freshness(format!("timestamp {} outside window at {}", ts.0, now.0)))
        }
    }

    fn check_replay(&mut self, request_id: RequestId, now: Timestamp) -> Result<(), Reject> {
        let horizon = now.0.saturating_sub(2 * self.config.freshness_window_ms);
        self.seen.retain(|_, ts| ts.0 >= horizon);
        if self.seen.contains_key(&request_id) {
            return Err(Reject::freshness(format!("request {request_id} replayed")));
        }
        self.seen.insert(request_id, now);
        Ok(())
    }

    fn expired(&self, started: Timestamp, now: Timestamp) -> bool {
        now.0.saturating_sub(started.0) > self.config.session_ttl_ms
    }
}

/// SS bytes that are wiped once the caller is done.
struct Secret(Vec<u8>);

impl Drop for Secret {
    fn drop(&mut self) {
        self.0.fill(0);
    }
}

fn master_secret(reg: &KeyRegistry, id: &EntityId) -> Result<Secret, ProtocolError> {
    reg.master_secret_bytes(id).map(Secret)
}

fn concat(parts: &[&[u8]]) -> Vec<u8> {
    parts.concat()
}

/// Decrypted request-leg payload.
struct RequestPayload {
    saml: SamlRequest,
    sig: Sig,
    nonce: Option<Nonce>,
    sec: Option<SecValue>,
    ts: Timestamp,
}

fn expected_sender_role(leg: Leg) -> Role {
    match leg {
        Leg::RSen1 => Role::Sensor,
        Leg::RBs2 | Leg::RBs3 => Role::Bs,
        Leg::RIs2 | Leg::RIs3 => Role::Is,
        Leg::RRs2 => Role::Rs,
    }
}

fn open_request(core: &mut Core, reg: &KeyRegistry, env: &Envelope, leg: Leg) -> Result<RequestPayload, Reject> {
    if env.leg != leg {
        return Err(Reject::malformed(format!("expected {leg}, got {}", env.leg)));
    }
    if reg.role_of(&env.sender) != Some(expected_sender_role(leg)) {
        return Err(Reject::integrity(format!("sender {} may not send {leg}", env.sender)));
    }
    let plain = core.open(reg, env)?;
    let (has_nonce, has_sec) = match leg {
        Leg::RSen1 => (true, false),
        Leg::RIs2 => (false, true),
        _ => (false, false),
    };
    let tail = SIGNATURE_BYTES + 16 * usize::from(has_nonce) + 16 * usize::from(has_sec) + 8 + 16;
    if plain.len() <= tail {
        return Err(Reject::malformed(format!("{leg} payload of {} bytes is too short", plain.len())));
    }
    let (doc, mut rest) = plain.split_at(plain.len() - tail);
    let mut take = |n: usize| {
        let (head, tail) = rest.split_at(n);
        rest = tail;
        head
    };
    let sig: Sig = take(SIGNATURE_BYTES).try_into().unwrap();
    let nonce = has_nonce.then(|| Nonce(take(16).try_into().unwrap()));
    let sec = has_sec.then(|| SecValue(take(16).try_into().unwrap()));
    let ts = Timestamp::from_bytes(take(8).try_into().unwrap());
    let sender = EntityId(take(16).try_into().unwrap());

    let saml = parse_request(doc).map_err(|e| Reject::integrity(format!("request document: {e}")))?;
    if sender != env.sender || saml.issuer != env.sender {
        return Err(Reject::integrity("sender fields disagree"));
    }
    if saml.issue_instant != ts {
        return Err(Reject::integrity("document instant disagrees with timestamp"));
    }
    Ok(RequestPayload { saml, sig, nonce, sec, ts })
}

/// Signature check, masked-value check, freshness, replay; in that order.
fn check_request(
    core: &mut Core,
    reg: &KeyRegistry,
    payload: &RequestPayload,
    signed: &[u8],
    now: Timestamp,
) -> Result<(), Reject> {
    if !core.verify(reg, &payload.saml.issuer, signed, &payload.sig)? {
        return Err(Reject::integrity("signature does not verify"));
    }
    if payload.saml.v_tm != compute_vtm(&payload.sig, &core.id, payload.ts) {
        return Err(Reject::integrity("masked value does not match signature and timestamp"));
    }
    core.check_fresh(payload.ts, now)?;
    core.check_replay(payload.saml.request_id, now)
}

/// Forwards `saml` (re-issued by `core`) with a fresh signature toward `recipient`.
fn forward_request(
    core: &mut Core,
    reg: &KeyRegistry,
    leg: Leg,
    recipient: EntityId,
    mut saml: SamlRequest,
    sec: Option<&SecValue>,
    now: Timestamp,
) -> Result<(Envelope, Sig), ProtocolError> {
    let ts = core.timestamp(now);
    saml.issuer = core.id;
    saml.issue_instant = ts;
    saml.v_tm = Vtm([0; 64]);
    let ss = master_secret(reg, &core.id)?;
    let sec_bytes: &[u8] = sec.map(|s| &s.0[..]).unwrap_or(&[]);
    let sig = core.sign(reg, &concat(&[&ss.0, &recipient.0, sec_bytes, &binding_bytes(&saml)]))?;
    saml.v_tm = compute_vtm(&sig, &recipient, ts);
    let plain = concat(&[&serialize_request(&saml), &sig, sec_bytes, &ts.to_bytes(), &core.id.0]);
    Ok((core.seal(reg, leg, &recipient, &plain)?, sig))
}

/// `T_AR || N || TS || responder_id` sealed toward the previous hop.
pub fn build_response(
    reg: &KeyRegistry,
    config: &ProtocolConfig,
    leg: Leg,
    responder: EntityId,
    recipient: EntityId,
    sig_bits: &Sig,
    sec: &SecValue,
    nonce: Nonce,
    ts: Timestamp,
    iv: [u8; 16],
) -> Result<Envelope, ProtocolError> {
    let t_ar = token_tar(sig_bits, &nonce, sec);
    let plain = response_plaintext(&t_ar, &nonce, ts, &responder);
    Ok(seal(leg, responder, &recipient, reg.link(&responder, &recipient)?, config.rounds, iv, &plain))
}

fn respond(
    core: &mut Core,
    reg: &KeyRegistry,
    leg: Leg,
    recipient: EntityId,
    sig_bits: &Sig,
    sec: &SecValue,
    now: Timestamp,
) -> Result<Envelope, ProtocolError> {
    let nonce = core.nonce();
    let ts = core.timestamp(now);
    let iv = core.iv();
    core.counters.encryptions += 1;
    build_response(reg, &core.config, leg, core.id, recipient, sig_bits, sec, nonce, ts, iv)
}

/// Opens a response leg and finds the pending session whose signature
/// unmasks it to the expected Sec.
fn match_response<S>(
    core: &mut Core,
    reg: &KeyRegistry,
    env: &Envelope,
    leg: Leg,
    from: EntityId,
    sessions: &[S],
    key: impl Fn(&S) -> (&Sig, SecValue),
    now: Timestamp,
) -> Result<usize, Reject> {
    if env.leg != leg {
        return Err(Reject::malformed(format!("expected {leg}, got {}", env.leg)));
    }
    if env.sender != from {
        return Err(Reject::integrity(format!("{leg} from unexpected sender {}", env.sender)));
    }
    let plain = core.open(reg, env)?;
    let fields = parse_response(&plain).ok_or_else(|| Reject::malformed(format!("{leg} payload has wrong length")))?;
    if fields.responder != env.sender {
        return Err(Reject::integrity("responder field disagrees with sender"));
    }
    let idx = sessions
        .iter()
        .position(|s| {
            let (sig, expected) = key(s);
            recover_sec(&fields.t_ar, sig, &fields.nonce) == Some(expected)
        })
        .ok_or_else(|| Reject::integrity("token does not unmask to a pending session secret"))?;
    core.check_fresh(fields.ts, now)?;
    Ok(idx)
}

#[derive(Clone, Debug)]
pub struct SensorRequest {
    pub envelope: Envelope,
    pub tag: u64,
    pub request_id: RequestId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionResult {
    pub tag: u64,
    pub sec: SecValue,
    pub started: Timestamp,
    pub completed: Timestamp,
}

struct SensorSession {
    tag: u64,
    sen_s: Sig,
    started: Timestamp,
}

pub struct Sensor {
    core: Core,
    ids: RequestIdSource,
    next_tag: u64,
    pending: Vec<SensorSession>,
    stored_sec: Option<SecValue>,
}

impl Sensor {
    pub fn new(id: EntityId, config: ProtocolConfig, seed: u64) -> Self {
        let mut id_seed = [0u8; 8];
        id_seed.copy_from_slice(&id.0[..8]);
        Sensor {
            core: Core::new(id, config, seed),
            ids: RequestIdSource::new(seed ^ u64::from_be_bytes(id_seed)),
            next_tag: 0,
            pending: Vec::new(),
            stored_sec: None,
        }
    }

    pub fn id(&self) -> EntityId {
        self.core.id
    }

    pub fn counters(&self) -> OpCounters {
        self.core.counters
    }

    pub fn stored_sec(&self) -> Option<SecValue> {
        self.stored_sec
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Builds `R_Sen1` carrying `readings` as request attributes.
    pub fn build_request(
        &mut self,
        reg: &KeyRegistry,
        now: Timestamp,
        action: Action,
        readings: Vec<(String, String)>,
    ) -> Result<SensorRequest, ProtocolError> {
        let me = self.core.id;
        let bs = reg.bs();
        let ts = self.core.timestamp(now);
        let nonce = self.core.nonce();
        let mut attributes = vec![("action".to_string(), action.name().to_string())];
        attributes.extend(readings);
        let mut saml = create_request(&mut self.ids, me, me, &[0; 64], ts, attributes)
            .map_err(|e| ProtocolError::Provisioning(e.to_string()))?;
        let ss = master_secret(reg, &me)?;
        let sen_s = self.core.sign(reg, &concat(&[&ss.0, &nonce.0, &me.0, &binding_bytes(&saml)]))?;
        saml.v_tm = compute_vtm(&sen_s, &bs, ts);
        let plain = concat(&[&serialize_request(&saml), &sen_s, &nonce.0, &ts.to_bytes(), &me.0]);
        let envelope = self.core.seal(reg, Leg::RSen1, &bs, &plain)?;

        let tag = self.next_tag;
        self.next_tag += 1;
        self.pending.retain(|s| !self.core.expired(s.started, now));
        self.pending.push(SensorSession { tag, sen_s, started: ts });
        Ok(SensorRequest { envelope, tag, request_id: saml.request_id })
    }

    /// Recovers Sec from `R_BS3` and stores it on success.
    pub fn process_response(&mut self, reg: &KeyRegistry, env: &Envelope, now: Timestamp) -> Result<SessionResult, Reject> {
        let expected = session_sec(&self.core.id, &reg.bs(), &reg.is(), &reg.rs());
        let idx = match_response(
            &mut self.core,
            reg,
            env,
            Leg::RBs3,
            reg.bs(),
            &self.pending,
            |s| (&s.sen_s, expected),
            now,
        )?;
        let session = self.pending.remove(idx);
        self.stored_sec = Some(expected);
        Ok(SessionResult { tag: session.tag, sec: expected, started: session.started, completed: now })
    }

    /// Forgets a session the caller gave up on.
    pub fn abandon(&mut self, tag: u64) -> bool {
        let before = self.pending.len();
        self.pending.retain(|s| s.tag != tag);
        before != self.pending.len()
    }
}

struct BsSession {
    sensor: EntityId,
    sen_s: Sig,
    bs_s2: Sig,
    started: Timestamp,
}

pub struct BaseStation {
    core: Core,
    sessions: Vec<BsSession>,
    seen_nonces: BTreeMap<Nonce, Timestamp>,
}

impl BaseStation {
    pub fn new(id: EntityId, config: ProtocolConfig, seed: u64) -> Self {
        BaseStation { core: Core::new(id, config, seed), sessions: Vec::new(), seen_nonces: BTreeMap::new() }
    }

    pub fn id(&self) -> EntityId {
        self.core.id
    }

    pub fn counters(&self) -> OpCounters {
        self.core.counters
    }

    /// `R_Sen1` in, `R_BS2` out.
    pub fn process_request(&mut self, reg: &KeyRegistry, env: &Envelope, now: Timestamp) -> Result<Envelope, Reject> {
        let core = &mut self.core;
        let p = open_request(core, reg, env, Leg::RSen1)?;
        let nonce = p.nonce.expect("R_Sen1 carries a nonce");
        if p.saml.subject != env.sender {
            return Err(Reject::integrity("sensor requests must be about the sensor itself"));
        }
        let ss = master_secret(reg, &core.id)?;
        let signed = concat(&[&ss.0, &nonce.0, &env.sender.0, &binding_bytes(&p.saml)]);
        drop(ss);
        check_request(core, reg, &p, &signed, now)?;
        let horizon = now.0.saturating_sub(2 * core.config.freshness_window_ms);
        self.seen_nonces.retain(|_, ts| ts.0 >= horizon);
        if self.seen_nonces.insert(nonce, now).is_some() {
            return Err(Reject::freshness("sensor nonce replayed"));
        }
        let (out, bs_s2) = forward_request(core, reg, Leg::RBs2, reg.is(), p.saml, None, now)?;
        self.sessions.retain(|s| !core.expired(s.started, now));
        self.sessions.push(BsSession { sensor: env.sender, sen_s: p.sig, bs_s2, started: now });
        Ok(out)
    }

    /// `R_IS3` in, `R_BS3` out, addressed to the returned sensor.
    pub fn process_response(
        &mut self,
        reg: &KeyRegistry,
        env: &Envelope,
        now: Timestamp,
    ) -> Result<(Envelope, EntityId), Reject> {
        let (bs, is, rs) = (reg.bs(), reg.is(), reg.rs());
        let idx = match_response(
            &mut self.core,
            reg,
            env,
            Leg::RIs3,
            is,
            &self.sessions,
            |s| (&s.bs_s2, session_sec(&s.sensor, &bs, &is, &rs)),
            now,
        )?;
        let session = self.sessions.remove(idx);
        let sec = session_sec(&session.sensor, &bs, &is, &rs);
        let out = respond(&mut self.core, reg, Leg::RBs3, session.sensor, &session.sen_s, &sec, now)?;
        Ok((out, session.sensor))
    }

    pub fn pending(&self) -> usize {
        self.sessions.len()
    }
}

struct IsSession {
    bs_s2: Sig,
    is_s2: Sig,
    sec: SecValue,
    started: Timestamp,
}

/// Provider-side record kept by IS; never holds patient readings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub request_id: RequestId,
    pub subject: EntityId,
    pub action: Option<Action>,
    pub decision: Decision,
    pub at: Timestamp,
}

pub struct InfoServer {
    core: Core,
    policies: Vec<PolicyRule>,
    access: AccessCounter,
    release: AttributeRelease,
    sessions: Vec<IsSession>,
    decisions: Vec<DecisionRecord>,
}

impl InfoServer {
    pub fn new(
        id: EntityId,
        config: ProtocolConfig,
        seed: u64,
        policies: Vec<PolicyRule>,
        release: AttributeRelease,
    ) -> Self {
        InfoServer {
            core: Core::new(id, config, seed),
            policies,
            access: AccessCounter::new(),
            release,
            sessions: Vec::new(),
            decisions: Vec::new(),
        }
    }

    pub fn id(&self) -> EntityId {
        self.core.id
    }

    pub fn counters(&self) -> OpCounters {
        self.core.counters
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    pub fn policies(&self) -> &[PolicyRule] {
        &self.policies
    }

    /// `R_BS2` in, `R_IS2` out. Returns the computed Sec alongside.
    pub fn process_request(
        &mut self,
        reg: &KeyRegistry,
        env: &Envelope,
        now: Timestamp,
    ) -> Result<(Envelope, SecValue), Reject> {
        let core = &mut self.core;
        let p = open_request(core, reg, env, Leg::RBs2)?;
        let ss = master_secret(reg, &core.id)?;
        let signed = concat(&[&ss.0, &core.id.0, &binding_bytes(&p.saml)]);
        drop(ss);
        check_request(core, reg, &p, &signed, now)?;

        let rs = reg.rs();
        let subject = p.saml.subject;
        let action = p.saml.attributes.iter().find(|(k, _)| k == "action").and_then(|(_, v)| v.parse::<Action>().ok());
        let role = reg.role_of(&subject).map(|r| r.name()).unwrap_or("unknown");
        let decision = match action {
            Some(action) => {
                let query = AccessQuery { subject_role: role, recipient: rs, action, now };
                evaluate(&self.policies, &mut self.access, &query, &p.saml)
            }
            None => Decision::Indeterminate,
        };
        self.decisions.push(DecisionRecord { request_id: p.saml.request_id, subject, action, decision, at: now });
        if decision != Decision::Permit {
            return Err(Reject {
                reason: RejectReason::Policy,
                detail: format!("policy decision {decision:?}"),
                decision: Some(decision),
            });
        }

        let sec = session_sec(&subject, &reg.bs(), &core.id, &rs);
        let released = self.release.filter(&p.saml, &rs);
        let (out, is_s2) = forward_request(core, reg, Leg::RIs2, rs, released, Some(&sec), now)?;
        self.sessions.retain(|s| !core.expired(s.started, now));
        self.sessions.push(IsSession { bs_s2: p.sig, is_s2, sec, started: now });
        Ok((out, sec))
    }

    /// `R_RS2` in, `R_IS3` out.
    pub fn process_response(&mut self, reg: &KeyRegistry, env: &Envelope, now: Timestamp) -> Result<Envelope, Reject> {
        let idx = match_response(
            &mut self.core,
            reg,
            env,
            Leg::RRs2,
            reg.rs(),
            &self.sessions,
            |s| (&s.is_s2, s.sec),
            now,
        )?;
        let session = self.sessions.remove(idx);
        Ok(respond(&mut self.core, reg, Leg::RIs3, reg.bs(), &session.bs_s2, &session.sec, now)?)
    }

    pub fn pending(&self) -> usize {
        self.sessions.len()
    }
}

/// A reading stored on RS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub request_id: RequestId,
    pub subject: EntityId,
    pub stored_at: Timestamp,
    pub readings: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct RsAccept {
    pub action: Action,
    pub request_id: RequestId,
    pub subject: EntityId,
    /// Records for the subject after a store, or those returned by a retrieve.
    pub records: usize,
    pub response: Envelope,
}

pub struct RepoServer {
    core: Core,
    dataset: Vec<PatientRecord>,
}

impl RepoServer {
    pub fn new(id: EntityId, config: ProtocolConfig, seed: u64) -> Self {
        RepoServer { core: Core::new(id, config, seed), dataset: Vec::new() }
    }

    pub fn id(&self) -> EntityId {
        self.core.id
    }

    pub fn counters(&self) -> OpCounters {
        self.core.counters
    }

    pub fn dataset(&self) -> &[PatientRecord] {
        &self.dataset
    }

    /// `R_IS2` in; performs the action and answers with `R_RS2`.
    pub fn process_request(&mut self, reg: &KeyRegistry, env: &Envelope, now: Timestamp) -> Result<RsAccept, Reject> {
        let core = &mut self.core;
        let p = open_request(core, reg, env, Leg::RIs2)?;
        let sec = p.sec.expect("R_IS2 carries Sec");
        let ss = master_secret(reg, &core.id)?;
        let signed = concat(&[&ss.0, &core.id.0, &sec.0, &binding_bytes(&p.saml)]);
        drop(ss);
        check_request(core, reg, &p, &signed, now)?;
        let subject = p.saml.subject;
        if sec != session_sec(&subject, &reg.bs(), &reg.is(), &core.id) {
            return Err(Reject::integrity("session secret does not match the provisioned identities"));
        }
        let action = p
            .saml
            .attributes
            .iter()
            .find(|(k, _)| k == "action")
            .and_then(|(_, v)| v.parse::<Action>().ok())
            .ok_or_else(|| Reject::malformed("request names no action"))?;
        let records = match action {
            Action::Store => {
                let readings = p.saml.attributes.iter().filter(|(k, _)| k != "action").cloned().collect();
                self.dataset.push(PatientRecord {
                    request_id: p.saml.request_id,
                    subject,
                    stored_at: now,
                    readings,
                });
                self.dataset.iter().filter(|r| r.subject == subject).count()
            }
            Action::Retrieve => self.dataset.iter().filter(|r| r.subject == subject).count(),
        };
        let response = respond(core, reg, Leg::RRs2, env.sender, &p.sig, &sec, now)?;
        Ok(RsAccept { action, request_id: p.saml.request_id, subject, records, response })
    }

    pub fn load_dataset(&mut self, records: Vec<PatientRecord>) {
        self.dataset = records;
    }
}
