use super::entities::{BaseStation, InfoServer, RepoServer, RsAccept, Sensor, SessionResult};
use super::{Envelope, KeyRegistry, Leg, ProtocolConfig, ProtocolError, Reject};
use crate::atoms::{SecValue, Timestamp};
use crate::policy::{Action, AttributeRelease, PolicyRule};

/// All four entity kinds over one registry, wired back to back with no
/// network in between.
pub struct Deployment {
    pub registry: KeyRegistry,
    pub config: ProtocolConfig,
    pub sensors: Vec<Sensor>,
    pub bs: BaseStation,
    pub is: InfoServer,
    pub rs: RepoServer,
}

#[derive(Clone, Debug)]
pub struct SessionTrace {
    pub envelopes: Vec<Envelope>,
    pub is_sec: SecValue,
    pub accept: RsAccept,
    pub result: SessionResult,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionFailure {
    /// Leg that was rejected by its receiver.
    pub leg: Leg,
    pub reject: Reject,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{} rejected: {}", .0.leg, .0.reject)]
    Rejected(SessionFailure),
}

impl Deployment {
    pub fn new(registry: KeyRegistry, config: ProtocolConfig, seed: u64) -> Self {
        let policies = registry.default_policy();
        let release = registry.default_release();
        Self::with_policy(registry, config, seed, policies, release)
    }

    pub fn with_policy(
        registry: KeyRegistry,
        config: ProtocolConfig,
        seed: u64,
        policies: Vec<PolicyRule>,
        release: AttributeRelease,
    ) -> Self {
        Deployment {
            sensors: registry.sensors().iter().map(|id| Sensor::new(*id, config, seed)).collect(),
            bs: BaseStation::new(registry.bs(), config, seed),
            is: InfoServer::new(registry.is(), config, seed, policies, release),
            rs: RepoServer::new(registry.rs(), config, seed),
            registry,
            config,
        }
    }

    pub fn run_session(
        &mut self,
        sensor: usize,
        now: Timestamp,
        action: Action,
        readings: Vec<(String, String)>,
    ) -> Result<SessionTrace, SessionError> {
        self.run_session_with(sensor, now, action, readings, |_, _| {})
    }

    /// Like [`Deployment::run_session`], but `hook` sees every envelope
    /// before its receiver does and may alter it.
    pub fn run_session_with(
        &mut self,
        sensor: usize,
        now: Timestamp,
        action: Action,
        readings: Vec<(String, String)>,
        mut hook: impl FnMut(Leg, &mut Envelope),
    ) -> Result<SessionTrace, SessionError> {
        let reg = &self.registry;
        let mut envelopes = Vec::with_capacity(6);
        let mut pass = |mut env: Envelope| {
            hook(env.leg, &mut env);
            envelopes.push(env.clone());
            env
        };
        let fail = |leg: Leg| move |reject: Reject| SessionError::Rejected(SessionFailure { leg, reject });

        let req = self.sensors[sensor].build_request(reg, now, action, readings)?;
        let env = pass(req.envelope);
        let env = pass(self.bs.process_request(reg, &env, now).map_err(fail(Leg::RSen1))?);
        let (env, is_sec) = self.is.process_request(reg, &env, now).map_err(fail(Leg::RBs2))?;
        let env = pass(env);
        let accept = self.rs.process_request(reg, &env, now).map_err(fail(Leg::RIs2))?;
        let env = pass(accept.response.clone());
        let env = pass(self.is.process_response(reg, &env, now).map_err(fail(Leg::RRs2))?);
        let env = pass(self.bs.process_response(reg, &env, now).map_err(fail(Leg::RIs3))?.0);
        let result = self.sensors[sensor].process_response(reg, &env, now);
        if result.is_err() {
            self.sensors[sensor].abandon(req.tag);
        }
        let result = result.map_err(fail(Leg::RBs3))?;
        Ok(SessionTrace { envelopes, is_sec, accept, result })
    }
}
