use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{AttackKind, AttackSpec, SimConfig};
use super::metrics::{Metrics, NodeEnergy};
use super::topology::{NodeId, NodeKind};
use super::SimError;
use crate::atoms::{EntityId, Nonce, RequestId, Timestamp, Vtm};
use crate::cipher::{AesKey192, RoundConfig};
use crate::policy::{serialize_request, AttributeRelease, PolicyRule, SamlRequest};
use crate::protocol::envelope::seal;
use crate::protocol::{
    BaseStation, DecisionRecord, Envelope, InfoServer, KeyRegistry, Leg, OpCounters, PatientRecord, ProtocolConfig, Reject,
    RejectReason, RepoServer, Sensor,
};

/// Bytes that only ever appear in a decrypted request.
const PLAINTEXT_MARKERS: [&[u8]; 2] = [b"<AuthzRequest>", b"<Attribute Name="];
const MAX_HOPS: u32 = 64;

/// Provisions a registry from the scenario seed and runs it.
pub fn run(config: &SimConfig) -> Result<Metrics, SimError> {
    config.validate()?;
    let sensors = config.topology.nodes_of(NodeKind::Sensor).len();
    let registry = KeyRegistry::provision(sensors, config.seed)?;
    let policies = registry.default_policy();
    let release = registry.default_release();
    run_with(config, registry, policies, release, false)
}

/// Runs against existing key material and policy.
pub fn run_with(
    config: &SimConfig,
    registry: KeyRegistry,
    policies: Vec<PolicyRule>,
    release: AttributeRelease,
    trace: bool,
) -> Result<Metrics, SimError> {
    let inputs = Provisioned { registry, policies, release, records: Vec::new() };
    Ok(run_provisioned(config, inputs, trace)?.metrics)
}

/// Everything a deployment brings to a run.
pub struct Provisioned {
    pub registry: KeyRegistry,
    pub policies: Vec<PolicyRule>,
    pub release: AttributeRelease,
    /// Records already held by RS.
    pub records: Vec<PatientRecord>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: Metrics,
    /// RS dataset after the run.
    pub records: Vec<PatientRecord>,
    /// IS decision log of this run.
    pub decisions: Vec<DecisionRecord>,
}

pub fn run_provisioned(config: &SimConfig, inputs: Provisioned, trace: bool) -> Result<RunOutput, SimError> {
    config.validate()?;
    let mut sim = Sim::new(config, inputs.registry, inputs.policies, inputs.release, trace)?;
    if let Some(Entity::Rs(rs)) = sim.entities.values_mut().find(|e| matches!(e, Entity::Rs(_))) {
        rs.load_dataset(inputs.records);
    }
    sim.schedule_initial();
    sim.run_loop();
    let mut records = Vec::new();
    let mut decisions = Vec::new();
    for e in sim.entities.values() {
        match e {
            Entity::Rs(rs) => records = rs.dataset().to_vec(),
            Entity::Is(is) => decisions = is.decisions().to_vec(),
            _ => {}
        }
    }
    Ok(RunOutput { metrics: sim.finish(), records, decisions })
}

#[derive(Clone, Debug)]
struct Packet {
    env: Envelope,
    origin: NodeId,
    dst: NodeId,
    session: Option<u64>,
    adversarial: bool,
    instances: Vec<usize>,
    hops: u32,
}

#[derive(Debug)]
enum Event {
    StartSession { node: NodeId },
    Arrive { node: NodeId, packet: Packet },
    Timeout { session: u64 },
    Outage { node: NodeId },
    Inject { attack: usize, remaining: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Open,
    Completed,
    Alarmed,
}

struct Session {
    sensor: NodeId,
    tag: u64,
    status: Status,
    envelopes: u64,
}

#[derive(Debug)]
struct Instance {
    kind: AttackKind,
    detected: bool,
    session: Option<u64>,
    node: Option<NodeId>,
    /// For unaltered rushing relays: whether the observation was ciphertext only.
    clean: bool,
}

struct Bucket {
    milli_tokens: u64,
    last_ms: u64,
}

enum Entity {
    Sensor(Box<Sensor>),
    Bs(Box<BaseStation>),
    Is(Box<InfoServer>),
    Rs(Box<RepoServer>),
}

impl Entity {
    fn counters(&self) -> OpCounters {
        match self {
            Entity::Sensor(e) => e.counters(),
            Entity::Bs(e) => e.counters(),
            Entity::Is(e) => e.counters(),
            Entity::Rs(e) => e.counters(),
        }
    }
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    reg: KeyRegistry,
    adj: BTreeMap<NodeId, Vec<(NodeId, u64)>>,
    now: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<(u64, u64)>>,
    events: BTreeMap<u64, Event>,
    rng: ChaCha8Rng,
    entities: BTreeMap<NodeId, Entity>,
    node_of: BTreeMap<EntityId, NodeId>,
    bs: NodeId,
    energy: BTreeMap<NodeId, NodeEnergy>,
    disabled: BTreeSet<NodeId>,
    flagged: BTreeSet<NodeId>,
    route_cache: BTreeMap<(NodeId, NodeId), Option<Vec<NodeId>>>,
    sessions: BTreeMap<u64, Session>,
    by_tag: BTreeMap<(NodeId, u64), u64>,
    instances: Vec<Instance>,
    buckets: BTreeMap<NodeId, Bucket>,
    watch: BTreeMap<NodeId, VecDeque<bool>>,
    mitm: BTreeMap<NodeId, f64>,
    rushing: BTreeMap<NodeId, f64>,
    greed: BTreeMap<NodeId, f64>,
    link_drop: BTreeMap<(NodeId, NodeId), f64>,
    metrics: Metrics,
    trace: bool,
}

impl<'a> Sim<'a> {
    fn new(
        cfg: &'a SimConfig,
        reg: KeyRegistry,
        policies: Vec<PolicyRule>,
        release: AttributeRelease,
        trace: bool,
    ) -> Result<Self, SimError> {
        let topo = &cfg.topology;
        let sensor_nodes = topo.nodes_of(NodeKind::Sensor);
        if sensor_nodes.len() != reg.sensors().len() {
            return Err(SimError::Config(format!(
                "topology has {} sensors but the keystore provisions {}",
                sensor_nodes.len(),
                reg.sensors().len()
            )));
        }
        let pcfg = ProtocolConfig {
            freshness_window_ms: cfg.freshness_window_ms,
            rounds: RoundConfig::Ten,
            session_ttl_ms: cfg.response_timeout_ms.max(cfg.freshness_window_ms) * 2,
        };
        let bs = topo.single(NodeKind::BaseStation)?;
        let is = topo.single(NodeKind::InfoServer)?;
        let rs = topo.single(NodeKind::RepoServer)?;
        let mut entities = BTreeMap::new();
        let mut node_of = BTreeMap::new();
        for (node, id) in sensor_nodes.iter().zip(reg.sensors()) {
            entities.insert(*node, Entity::Sensor(Box::new(Sensor::new(*id, pcfg, cfg.seed))));
            node_of.insert(*id, *node);
        }
        entities.insert(bs, Entity::Bs(Box::new(BaseStation::new(reg.bs(), pcfg, cfg.seed))));
        entities.insert(is, Entity::Is(Box::new(InfoServer::new(reg.is(), pcfg, cfg.seed, policies, release))));
        entities.insert(rs, Entity::Rs(Box::new(RepoServer::new(reg.rs(), pcfg, cfg.seed))));
        node_of.insert(reg.bs(), bs);
        node_of.insert(reg.is(), is);
        node_of.insert(reg.rs(), rs);

        let e = &cfg.energy;
        let energy = topo
            .nodes
            .iter()
            .map(|n| {
                let default = match n.kind {
                    NodeKind::Sensor => e.sensor_capacity,
                    NodeKind::ClusterHead => e.relay_capacity,
                    NodeKind::Adversary => u64::MAX / 4,
                    _ => e.server_capacity,
                };
                (n.id, NodeEnergy { capacity: n.energy.unwrap_or(default), ..NodeEnergy::default() })
            })
            .collect();

        let mut sim = Sim {
            cfg,
            reg,
            adj: topo.adjacency(),
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            events: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            entities,
            node_of,
            bs,
            energy,
            disabled: BTreeSet::new(),
            flagged: BTreeSet::new(),
            route_cache: BTreeMap::new(),
            sessions: BTreeMap::new(),
            by_tag: BTreeMap::new(),
            instances: Vec::new(),
            buckets: BTreeMap::new(),
            watch: BTreeMap::new(),
            mitm: BTreeMap::new(),
            rushing: BTreeMap::new(),
            greed: BTreeMap::new(),
            link_drop: BTreeMap::new(),
            metrics: Metrics { run_id: cfg.name.clone(), ..Metrics::default() },
            trace,
        };
        for a in &cfg.attacks {
            sim.metrics.attacks.entry(a.kind()).or_default();
            match *a {
                AttackSpec::Mitm { node, probability } => {
                    sim.mitm.insert(node, probability);
                }
                AttackSpec::Rushing { node, alter_probability } => {
                    sim.rushing.insert(node, alter_probability);
                }
                AttackSpec::NeglectGreed { node, drop_probability } => {
                    sim.greed.insert(node, drop_probability);
                }
                AttackSpec::PacketDrop { from, to, probability } => {
                    sim.link_drop.insert((from, to), probability);
                }
                _ => {}
            }
        }
        Ok(sim)
    }

    fn log(&mut self, what: &str, node: NodeId, detail: impl FnOnce() -> String) {
        if self.trace {
            let line = format!("{}\t{what}\t{node}\t{}", self.now, detail());
            self.metrics.trace.push(line);
        }
    }

    fn schedule(&mut self, at: u64, event: Event) {
        let tick = self.cfg.clock_granularity_ms;
        let at = at.div_ceil(tick) * tick;
        self.seq += 1;
        self.events.insert(self.seq, event);
        self.queue.push(Reverse((at, self.seq)));
    }

    fn schedule_initial(&mut self) {
        let w = &self.cfg.workload;
        for (i, node) in self.cfg.topology.nodes_of(NodeKind::Sensor).into_iter().enumerate() {
            for k in 0..w.sessions_per_sensor {
                let at = w.start_ms + u64::from(k) * w.interval_ms + i as u64 * w.stagger_ms;
                self.schedule(at, Event::StartSession { node });
            }
        }
        for (i, a) in self.cfg.attacks.iter().enumerate() {
            match *a {
                AttackSpec::NodeOutage { node, at_ms } => self.schedule(at_ms, Event::Outage { node }),
                AttackSpec::Impersonation { count, start_ms, .. } | AttackSpec::Vampire { count, start_ms, .. }
                    if count > 0 =>
                {
                    self.schedule(start_ms, Event::Inject { attack: i, remaining: count })
                }
                _ => {}
            }
        }
    }

    fn run_loop(&mut self) {
        while let Some(Reverse((at, seq))) = self.queue.pop() {
            self.now = at;
            let event = self.events.remove(&seq).expect("queued event exists");
            match event {
                Event::StartSession { node } => self.start_session(node),
                Event::Arrive { node, packet } => self.arrive(node, packet),
                Event::Timeout { session } => self.timeout(session),
                Event::Outage { node } => {
                    self.disabled.insert(node);
                    self.route_cache.clear();
                    self.log("outage", node, String::new);
                }
                Event::Inject { attack, remaining } => self.inject(attack, remaining),
            }
        }
    }

    fn alive(&self, node: NodeId) -> bool {
        !self.disabled.contains(&node) && !self.energy[&node].halted
    }

    /// Charges `cost` units to `node`; a node that cannot pay halts and the
    /// operation does not happen.
    fn charge(&mut self, node: NodeId, cost: u64) -> bool {
        let e = self.energy.get_mut(&node).expect("known node");
        if e.halted || e.remaining() < cost {
            e.halted = true;
            self.route_cache.clear();
            return false;
        }
        e.consumed += cost;
        true
    }

    fn charge_ops(&mut self, node: NodeId, ops: &OpCounters) -> bool {
        let p = &self.cfg.energy;
        let sv = ops.signs + ops.verifies;
        let ed = ops.encryptions + ops.decryptions;
        if !self.charge(node, sv * p.sign_verify + ed * p.encrypt_decrypt) {
            return false;
        }
        let e = self.energy.get_mut(&node).unwrap();
        e.sign_verify += sv;
        e.encrypt_decrypt += ed;
        true
    }

    fn next_hop(&mut self, from: NodeId, dst: NodeId) -> Option<NodeId> {
        if let Some(cached) = self.route_cache.get(&(from, dst)) {
            return cached.as_ref().map(|p| p[1]);
        }
        let excluded: BTreeSet<NodeId> = self
            .energy
            .iter()
            .filter(|(id, e)| e.halted || self.disabled.contains(id) || self.flagged.contains(id))
            .map(|(id, _)| *id)
            .filter(|id| *id != from)
            .collect();
        let path = self.cfg.topology.route_with(&self.adj, from, dst, &excluded).ok();
        self.route_cache.insert((from, dst), path.clone());
        path.map(|p| p[1])
    }

    fn instance(&mut self, kind: AttackKind, session: Option<u64>, node: Option<NodeId>) -> usize {
        self.metrics.attacks.entry(kind).or_default().injected += 1;
        self.instances.push(Instance { kind, detected: false, session, node, clean: false });
        self.instances.len() - 1
    }

    fn emit(&mut self, origin: NodeId, env: Envelope, dst: NodeId, session: Option<u64>, adversarial: bool, instances: Vec<usize>) {
        self.metrics.sent += 1;
        self.metrics.wire_bytes += env.wire_len() as u64;
        *self.metrics.envelopes_by_leg.entry(env.leg.name().to_string()).or_default() += 1;
        if let Some(s) = session.and_then(|s| self.sessions.get_mut(&s)) {
            s.envelopes += 1;
        }
        let leg = env.leg;
        self.log("emit", origin, || format!("{leg}\tto {dst}"));
        let packet = Packet { env, origin, dst, session, adversarial, instances, hops: 0 };
        self.forward(origin, packet);
    }

    fn drop_packet(&mut self, node: NodeId, packet: &Packet, why: &str) {
        self.metrics.dropped += 1;
        let leg = packet.env.leg;
        self.log("drop", node, || format!("{leg}\t{why}"));
    }

    fn forward(&mut self, from: NodeId, packet: Packet) {
        let Some(next) = self.next_hop(from, packet.dst) else {
            if let Some(s) = packet.session {
                if self.disabled.iter().any(|d| self.cfg.topology.latency(from, *d).is_some()) {
                    self.outage_instance(s);
                }
            }
            return self.drop_packet(from, &packet, "unreachable");
        };
        if !self.charge(from, self.cfg.energy.send) {
            return self.drop_packet(from, &packet, "sender out of energy");
        }
        self.energy.get_mut(&from).unwrap().sends += 1;
        if let Some(&p) = self.link_drop.get(&(from, next)) {
            if self.rng.random_bool(p) {
                if packet.session.is_some() {
                    self.instance(AttackKind::PacketDrop, packet.session, Some(from));
                }
                return self.drop_packet(from, &packet, "link loss");
            }
        }
        let latency = self.cfg.topology.latency(from, next).expect("route follows links");
        self.schedule(self.now + latency, Event::Arrive { node: next, packet });
    }

    fn outage_instance(&mut self, session: u64) {
        let exists = self.instances.iter().any(|i| i.kind == AttackKind::NodeOutage && i.session == Some(session));
        if !exists {
            self.instance(AttackKind::NodeOutage, Some(session), None);
        }
    }

    fn arrive(&mut self, node: NodeId, mut packet: Packet) {
        if !self.alive(node) {
            if self.disabled.contains(&node) {
                if let Some(s) = packet.session {
                    self.outage_instance(s);
                }
            }
            return self.drop_packet(node, &packet, "node down");
        }
        if !self.charge(node, self.cfg.energy.receive) {
            return self.drop_packet(node, &packet, "receiver out of energy");
        }
        self.energy.get_mut(&node).unwrap().receives += 1;
        if node == self.bs && packet.adversarial {
            self.metrics.bs_adversarial_energy += self.cfg.energy.receive;
        }
        if node == packet.dst {
            return self.deliver(node, packet);
        }

        packet.hops += 1;
        if packet.hops > MAX_HOPS {
            return self.drop_packet(node, &packet, "hop limit");
        }
        if packet.origin != node {
            if let Some(&p) = self.greed.get(&node) {
                if self.rng.random_bool(p) {
                    self.instance(AttackKind::NeglectGreed, packet.session, Some(node));
                    self.observe_forwarding(node, false);
                    return self.drop_packet(node, &packet, "neglect");
                }
            }
            self.observe_forwarding(node, true);
        }
        if let Some(&p) = self.mitm.get(&node) {
            if self.rng.random_bool(p) {
                self.flip_bit(&mut packet.env);
                let i = self.instance(AttackKind::Mitm, packet.session, Some(node));
                packet.instances.push(i);
            }
        }
        if let Some(&p) = self.rushing.get(&node) {
            let seen = packet.env.encode();
            let clean = !PLAINTEXT_MARKERS.iter().any(|m| seen.windows(m.len()).any(|w| w == *m));
            if !clean {
                self.metrics.plaintext_leaks += 1;
            }
            let altered = self.rng.random_bool(p);
            if altered {
                self.flip_bit(&mut packet.env);
            }
            let i = self.instance(AttackKind::Rushing, packet.session, Some(node));
            self.instances[i].clean = clean && !altered;
            packet.instances.push(i);
        }
        self.forward(node, packet);
    }

    fn flip_bit(&mut self, env: &mut Envelope) {
        if env.ciphertext.is_empty() {
            return;
        }
        let bit = self.rng.random_range(0..env.ciphertext.len() * 8);
        env.ciphertext[bit / 8] ^= 1 << (bit % 8);
    }

    fn observe_forwarding(&mut self, node: NodeId, forwarded: bool) {
        let window = self.cfg.watchdog.window;
        let w = self.watch.entry(node).or_default();
        w.push_back(forwarded);
        if w.len() > window {
            w.pop_front();
        }
        let ratio = w.iter().filter(|f| **f).count() as f64 / w.len() as f64;
        if w.len() == window && ratio < self.cfg.watchdog.threshold && self.flagged.insert(node) {
            self.route_cache.clear();
            self.log("flag", node, || format!("delivery ratio {ratio:.2}"));
        }
    }

    fn rate_limited(&mut self, origin: NodeId) -> bool {
        let rl = &self.cfg.rate_limit;
        let cap = rl.burst * 1000;
        let now = self.now;
        let b = self.buckets.entry(origin).or_insert(Bucket { milli_tokens: cap, last_ms: now });
        b.milli_tokens = (b.milli_tokens + (now - b.last_ms) * rl.per_second).min(cap);
        b.last_ms = now;
        if b.milli_tokens >= 1000 {
            b.milli_tokens -= 1000;
            false
        } else {
            true
        }
    }

    fn deliver(&mut self, node: NodeId, packet: Packet) {
        let now = Timestamp(self.now);
        let leg = packet.env.leg;
        if node == self.bs && leg == Leg::RSen1 && self.rate_limited(packet.origin) {
            return self.reject(node, &packet, "rate_limit", None);
        }
        let Some(entity) = self.entities.get_mut(&node) else {
            return self.drop_packet(node, &packet, "no protocol entity");
        };
        let before = entity.counters();
        let reg = &self.reg;
        let env = &packet.env;
        // (outgoing envelope, destination entity) or session completion
        let outcome: Result<Option<(Envelope, EntityId)>, Reject> = match entity {
            Entity::Bs(bs) if leg == Leg::RIs3 => bs.process_response(reg, env, now).map(Some),
            Entity::Bs(bs) => bs.process_request(reg, env, now).map(|e| Some((e, reg.is()))),
            Entity::Is(is) if leg == Leg::RRs2 => is.process_response(reg, env, now).map(|e| Some((e, reg.bs()))),
            Entity::Is(is) => is.process_request(reg, env, now).map(|(e, _)| Some((e, reg.rs()))),
            Entity::Rs(rs) => rs.process_request(reg, env, now).map(|a| Some((a.response, reg.is()))),
            Entity::Sensor(s) => s.process_response(reg, env, now).map(|r| {
                let key = (node, r.tag);
                if let Some(id) = self.by_tag.get(&key) {
                    if let Some(sess) = self.sessions.get_mut(id) {
                        sess.status = Status::Completed;
                    }
                }
                None
            }),
        };
        let ops = self.entities[&node].counters().since(&before);
        if !self.charge_ops(node, &ops) {
            return self.drop_packet(node, &packet, "processing out of energy");
        }
        if node == self.bs && packet.adversarial {
            let p = &self.cfg.energy;
            self.metrics.bs_adversarial_energy += (ops.signs + ops.verifies) * p.sign_verify
                + (ops.encryptions + ops.decryptions) * p.encrypt_decrypt;
        }
        match outcome {
            Err(rej) => {
                let reason = rej.reason.name();
                self.reject(node, &packet, reason, Some(rej.reason));
            }
            Ok(next) => {
                self.metrics.delivered += 1;
                self.log("accept", node, || leg.name().to_string());
                if packet.adversarial && self.entities.get(&node).is_some_and(|e| matches!(e, Entity::Rs(_))) {
                    self.metrics.forged_reached_rs += 1;
                }
                for &i in &packet.instances {
                    if self.instances[i].kind == AttackKind::Rushing && self.instances[i].clean {
                        self.instances[i].detected = true;
                    }
                }
                match next {
                    Some((out, to)) => {
                        let dst = self.node_of[&to];
                        self.emit(node, out, dst, packet.session, packet.adversarial, packet.instances);
                    }
                    None => {
                        if let Some(s) = packet.session {
                            self.session_resolved(s);
                        }
                    }
                }
            }
        }
    }

    fn reject(&mut self, node: NodeId, packet: &Packet, reason: &str, cause: Option<RejectReason>) {
        *self.metrics.rejected.entry(reason.to_string()).or_default() += 1;
        let leg = packet.env.leg;
        self.log("reject", node, || format!("{leg}\t{reason}"));
        for &i in &packet.instances {
            let inst = &mut self.instances[i];
            inst.detected |= match inst.kind {
                AttackKind::Mitm => cause == Some(RejectReason::Integrity),
                AttackKind::Rushing => !inst.clean,
                AttackKind::Impersonation | AttackKind::Vampire => true,
                _ => false,
            };
        }
    }

    fn start_session(&mut self, node: NodeId) {
        if !self.alive(node) {
            return;
        }
        let action = self.cfg.workload.action;
        let readings = vec![("heart_rate".to_string(), (60 + self.rng.random_range(0..40u32)).to_string())];
        let Entity::Sensor(sensor) = self.entities.get_mut(&node).expect("sensor entity") else {
            unreachable!("sensor nodes map to sensors")
        };
        let before = sensor.counters();
        let Ok(req) = sensor.build_request(&self.reg, Timestamp(self.now), action, readings) else {
            return;
        };
        let ops = sensor.counters().since(&before);
        if !self.charge_ops(node, &ops) {
            return;
        }
        let id = self.sessions.len() as u64;
        self.metrics.sessions += 1;
        self.sessions.insert(id, Session { sensor: node, tag: req.tag, status: Status::Open, envelopes: 0 });
        self.by_tag.insert((node, req.tag), id);

        let outage_hit = {
            let none = BTreeSet::new();
            self.cfg
                .topology
                .route_with(&self.adj, node, self.bs, &none)
                .is_ok_and(|p| p.iter().any(|n| self.disabled.contains(n)))
        };
        if outage_hit {
            self.outage_instance(id);
        }
        self.schedule(self.now + self.cfg.response_timeout_ms, Event::Timeout { session: id });
        let bs = self.bs;
        self.emit(node, req.envelope, bs, Some(id), false, Vec::new());
    }

    fn timeout(&mut self, session: u64) {
        let s = self.sessions.get_mut(&session).expect("session exists");
        if s.status != Status::Open {
            return;
        }
        s.status = Status::Alarmed;
        let (node, tag) = (s.sensor, s.tag);
        self.metrics.alarms += 1;
        if let Some(Entity::Sensor(sensor)) = self.entities.get_mut(&node) {
            sensor.abandon(tag);
        }
        self.log("alarm", node, || format!("session {session}"));
        for inst in self.instances.iter_mut().filter(|i| i.session == Some(session)) {
            if matches!(inst.kind, AttackKind::PacketDrop | AttackKind::NodeOutage) {
                inst.detected = true;
            }
        }
    }

    fn session_resolved(&mut self, session: u64) {
        let s = &self.sessions[&session];
        if s.status == Status::Completed {
            self.metrics.completed += 1;
            self.metrics.session_envelopes += s.envelopes;
        }
        for inst in self.instances.iter_mut().filter(|i| i.session == Some(session)) {
            if inst.kind == AttackKind::NodeOutage {
                inst.detected = true;
            }
        }
    }

    fn inject(&mut self, attack: usize, remaining: u32) {
        let (node, interval, kind) = match self.cfg.attacks[attack] {
            AttackSpec::Impersonation { node, interval_ms, .. } => (node, interval_ms, AttackKind::Impersonation),
            AttackSpec::Vampire { node, interval_ms, .. } => (node, interval_ms, AttackKind::Vampire),
            _ => unreachable!("only injecting attacks are scheduled"),
        };
        let sensors = self.reg.sensors();
        let claimed = sensors[self.rng.random_range(0..sensors.len())];
        let env = forge_request(&mut self.rng, claimed, &self.reg.bs(), Timestamp(self.now));
        let i = self.instance(kind, None, Some(node));
        let bs = self.bs;
        self.emit(node, env, bs, None, true, vec![i]);
        if remaining > 1 {
            self.schedule(self.now + interval, Event::Inject { attack, remaining: remaining - 1 });
        }
    }

    fn finish(mut self) -> Metrics {
        for inst in &mut self.instances {
            if inst.kind == AttackKind::NeglectGreed {
                inst.detected = inst.node.is_some_and(|n| self.flagged.contains(&n));
            }
        }
        for inst in &self.instances {
            if inst.detected {
                self.metrics.attacks.get_mut(&inst.kind).expect("tally exists").detected += 1;
            }
        }
        for entity in self.entities.values() {
            let role = match entity {
                Entity::Sensor(_) => "sensor",
                Entity::Bs(_) => "bs",
                Entity::Is(_) => "is",
                Entity::Rs(_) => "rs",
            };
            let c = entity.counters();
            let acc = self.metrics.counters.entry(role.to_string()).or_default();
            acc.hashes += c.hashes;
            acc.signs += c.signs;
            acc.verifies += c.verifies;
            acc.encryptions += c.encryptions;
            acc.decryptions += c.decryptions;
        }
        let adversaries: BTreeSet<NodeId> = self.cfg.topology.nodes_of(NodeKind::Adversary).into_iter().collect();
        self.metrics.energy = std::mem::take(&mut self.energy).into_iter().filter(|(n, _)| !adversaries.contains(n)).collect();
        self.metrics.flagged = self.flagged.iter().copied().collect();
        self.metrics.vampire_ceiling = self.vampire_ceiling();
        self.metrics
    }

    /// Receive cost for every flood packet plus full decrypt-and-verify cost
    /// for what the rate limiter lets through.
    fn vampire_ceiling(&self) -> Option<u64> {
        let p = &self.cfg.energy;
        let rl = &self.cfg.rate_limit;
        let mut total = None;
        for a in &self.cfg.attacks {
            if let AttackSpec::Vampire { count, interval_ms, energy_ceiling, .. } = *a {
                let ceiling = energy_ceiling.unwrap_or_else(|| {
                    let duration_ms = u64::from(count) * interval_ms;
                    let admitted = (rl.burst + duration_ms * rl.per_second / 1000 + 1).min(u64::from(count));
                    u64::from(count) * p.receive + admitted * (p.encrypt_decrypt + p.sign_verify)
                });
                total = Some(total.unwrap_or(0) + ceiling);
            }
        }
        total
    }
}

/// A request an outsider can build: right shape, claimed sender, guessed
/// signature and nonce, encrypted under a key it made up.
pub fn forge_request(rng: &mut impl RngCore, claimed: EntityId, bs: &EntityId, now: Timestamp) -> Envelope {
    let mut bytes = |n: usize| {
        let mut v = vec![0u8; n];
        rng.fill_bytes(&mut v);
        v
    };
    let saml = SamlRequest {
        request_id: RequestId::from_slice(&bytes(16)).unwrap(),
        issuer: claimed,
        subject: claimed,
        v_tm: Vtm::from_slice(&bytes(64)).unwrap(),
        issue_instant: now,
        attributes: vec![("action".into(), "store".into())],
    };
    let nonce = Nonce::from_slice(&bytes(16)).unwrap();
    let sig = bytes(64);
    let key = AesKey192::from_slice(&bytes(24)).unwrap();
    let iv: [u8; 16] = bytes(16).try_into().unwrap();
    let plain = [&serialize_request(&saml)[..], &sig, &nonce.0, &now.to_bytes(), &claimed.0].concat();
    seal(Leg::RSen1, claimed, bs, &key, RoundConfig::Ten, iv, &plain)
}
