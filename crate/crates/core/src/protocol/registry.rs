use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::atoms::EntityId;
use crate::cipher::AesKey192;
use crate::policy::{Action, AttributeRelease, PolicyRule, Recipient, TimeWindow, Weekday};
use crate::sharing::{reconstruct, split_with_rng, MasterSecret, PrimeField, Share};
use crate::sign::{keygen, CurveParams, KeyPair, Point};

pub const SHARES_PER_ENTITY: usize = 3;
pub const THRESHOLD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sensor,
    Bs,
    Is,
    Rs,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Sensor => "sensor",
            Role::Bs => "bs",
            Role::Is => "is",
            Role::Rs => "rs",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sensor" => Ok(Role::Sensor),
            "bs" => Ok(Role::Bs),
            "is" => Ok(Role::Is),
            "rs" => Ok(Role::Rs),
            other => Err(ProtocolError::Provisioning(format!("unknown role {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EntityKeys {
    pub id: EntityId,
    pub role: Role,
    pub keypair: KeyPair,
    pub shares: Vec<Share>,
}

/// Read-only key material for one deployment.
#[derive(Clone, Debug)]
pub struct KeyRegistry {
    pub curve: CurveParams,
    pub field: PrimeField,
    pub threshold: usize,
    sensors: Vec<EntityId>,
    bs: EntityId,
    is: EntityId,
    rs: EntityId,
    entities: BTreeMap<EntityId, EntityKeys>,
    links: BTreeMap<(EntityId, EntityId), AesKey192>,
}

fn link_key_of(a: EntityId, b: EntityId) -> (EntityId, EntityId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl KeyRegistry {
    /// Fresh deployment with `n_sensors` sensors, fully determined by `seed`.
    pub fn provision(n_sensors: usize, seed: u64) -> Result<Self, ProtocolError> {
        Self::provision_on(CurveParams::p256(), PrimeField::production(), n_sensors, seed)
    }

    pub fn provision_on(
        curve: CurveParams,
        field: PrimeField,
        n_sensors: usize,
        seed: u64,
    ) -> Result<Self, ProtocolError> {
        if n_sensors == 0 {
            return Err(ProtocolError::Provisioning("at least one sensor is required".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut roles = vec![Role::Bs, Role::Is, Role::Rs];
        roles.extend(std::iter::repeat_n(Role::Sensor, n_sensors));

        let mut seen = BTreeSet::new();
        let mut ids = Vec::with_capacity(roles.len());
        while ids.len() < roles.len() {
            let mut b = [0u8; 16];
            rng.fill_bytes(&mut b);
            if seen.insert(b) {
                ids.push(EntityId(b));
            }
        }

        let secret = MasterSecret(field.random(&mut rng));
        let shares = split_with_rng(&field, &secret, SHARES_PER_ENTITY * roles.len(), THRESHOLD, &mut rng)?;

        let mut entities = Vec::with_capacity(roles.len());
        for (i, (id, role)) in ids.iter().zip(&roles).enumerate() {
            let mut key_seed = [0u8; 32];
            while key_seed.iter().all(|&b| b == 0) {
                rng.fill_bytes(&mut key_seed);
            }
            let keypair = keygen(&curve, &key_seed)?;
            let own = shares[i * SHARES_PER_ENTITY..(i + 1) * SHARES_PER_ENTITY].to_vec();
            entities.push(EntityKeys { id: *id, role: *role, keypair, shares: own });
        }

        let (bs, is, rs) = (ids[0], ids[1], ids[2]);
        let mut pairs: Vec<(EntityId, EntityId)> = ids[3..].iter().map(|s| (*s, bs)).collect();
        pairs.push((bs, is));
        pairs.push((is, rs));
        let links = pairs
            .into_iter()
            .map(|(a, b)| {
                let mut k = [0u8; 24];
                rng.fill_bytes(&mut k);
                ((a, b), AesKey192::new(k))
            })
            .collect();
        Self::assemble(curve, field, THRESHOLD, entities, links)
    }

    /// Validates and indexes previously generated material.
    pub fn assemble(
        curve: CurveParams,
        field: PrimeField,
        threshold: usize,
        entities: Vec<EntityKeys>,
        links: Vec<((EntityId, EntityId), AesKey192)>,
    ) -> Result<Self, ProtocolError> {
        let mut map = BTreeMap::new();
        let mut sensors = Vec::new();
        let (mut bs, mut is, mut rs) = (None, None, None);
        for e in entities {
            let slot = match e.role {
                Role::Sensor => {
                    sensors.push(e.id);
                    None
                }
                Role::Bs => Some(&mut bs),
                Role::Is => Some(&mut is),
                Role::Rs => Some(&mut rs),
            };
            if let Some(slot) = slot {
                if slot.replace(e.id).is_some() {
                    return Err(ProtocolError::Provisioning(format!("more than one {} entity", e.role)));
                }
            }
            if !curve.contains(&e.keypair.public) || matches!(e.keypair.public, Point::Infinity) {
                return Err(ProtocolError::Provisioning(format!("public key of {} is not on the curve", e.id)));
            }
            if e.shares.len() < threshold {
                return Err(ProtocolError::Provisioning(format!(
                    "{} holds {} shares, needs {threshold}",
                    e.id,
                    e.shares.len()
                )));
            }
            let id = e.id;
            if map.insert(id, e).is_some() {
                return Err(ProtocolError::Provisioning(format!("duplicate entity id {id}")));
            }
        }
        let missing = |r: Role| ProtocolError::Provisioning(format!("no {r} entity"));
        let bs = bs.ok_or_else(|| missing(Role::Bs))?;
        let is = is.ok_or_else(|| missing(Role::Is))?;
        let rs = rs.ok_or_else(|| missing(Role::Rs))?;
        if sensors.is_empty() {
            return Err(missing(Role::Sensor));
        }

        let reg = KeyRegistry {
            curve,
            field,
            threshold,
            sensors,
            bs,
            is,
            rs,
            entities: map,
            links: links.into_iter().map(|((a, b), k)| (link_key_of(a, b), k)).collect(),
        };
        for s in &reg.sensors {
            reg.link(s, &bs)?;
        }
        reg.link(&bs, &is)?;
        reg.link(&is, &rs)?;
        let mut secrets = reg.entities.keys().map(|id| reg.master_secret(id));
        let first = secrets.next().unwrap()?;
        for s in secrets {
            if s? != first {
                return Err(ProtocolError::Provisioning("shares disagree on the master secret".into()));
            }
        }
        Ok(reg)
    }

    pub fn sensors(&self) -> &[EntityId] {
        &self.sensors
    }

    pub fn bs(&self) -> EntityId {
        self.bs
    }

    pub fn is(&self) -> EntityId {
        self.is
    }

    pub fn rs(&self) -> EntityId {
        self.rs
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityKeys> {
        self.entities.values()
    }

    pub fn links(&self) -> impl Iterator<Item = (&(EntityId, EntityId), &AesKey192)> {
        self.links.iter()
    }

    pub fn keys(&self, id: &EntityId) -> Result<&EntityKeys, ProtocolError> {
        self.entities.get(id).ok_or(ProtocolError::UnknownEntity(*id))
    }

    pub fn role_of(&self, id: &EntityId) -> Option<Role> {
        self.entities.get(id).map(|e| e.role)
    }

    pub fn public_key(&self, id: &EntityId) -> Result<&Point, ProtocolError> {
        Ok(&self.keys(id)?.keypair.public)
    }

    pub fn link(&self, a: &EntityId, b: &EntityId) -> Result<&AesKey192, ProtocolError> {
        self.links.get(&link_key_of(*a, *b)).ok_or(ProtocolError::MissingLink(*a, *b))
    }

    /// SS reconstructed from the shares held by `id`.
    pub fn master_secret(&self, id: &EntityId) -> Result<MasterSecret, ProtocolError> {
        let keys = self.keys(id)?;
        Ok(reconstruct(&self.field, &keys.shares, self.threshold)?)
    }

    /// Byte encoding of SS as it enters signed messages.
    pub fn master_secret_bytes(&self, id: &EntityId) -> Result<Vec<u8>, ProtocolError> {
        let width = (self.field.modulus().bits() as usize).div_ceil(8);
        Ok(self.master_secret(id)?.to_bytes(width))
    }

    /// Store and retrieve permitted for every sensor toward RS at any time.
    pub fn default_policy(&self) -> Vec<PolicyRule> {
        [Action::Store, Action::Retrieve]
            .into_iter()
            .map(|action| PolicyRule {
                policy_id: format!("sensor-{}", action.name()),
                sender_role: Role::Sensor.name().into(),
                recipient: Recipient::Entity(self.rs),
                allowed_days: Weekday::ALL.into_iter().collect(),
                allowed_window: TimeWindow::all_day(),
                max_accesses_per_day: 1_000_000,
                action,
            })
            .collect()
    }

    pub fn default_release(&self) -> AttributeRelease {
        let names = ["action", "reading", "heart_rate", "spo2", "temperature"];
        let mut allowed = BTreeMap::new();
        allowed.insert(self.rs, names.iter().map(|s| s.to_string()).collect());
        AttributeRelease { allowed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provision_shape() {
        let reg = KeyRegistry::provision(3, 7).unwrap();
        assert_eq!(reg.entities().count(), 6);
        assert_eq!(reg.sensors().len(), 3);
        assert_eq!(reg.links().count(), 5);
        let ss = reg.master_secret(&reg.bs()).unwrap();
        for e in reg.entities() {
            assert_eq!(e.shares.len(), 3);
            assert_eq!(reg.master_secret(&e.id).unwrap(), ss);
        }
        assert!(reg.link(&reg.sensors()[0], &reg.rs()).is_err());
        assert_eq!(reg.master_secret_bytes(&reg.rs()).unwrap().len(), 32);
    }

    #[test]
    fn provision_is_deterministic() {
        let a = KeyRegistry::provision(2, 99).unwrap();
        let b = KeyRegistry::provision(2, 99).unwrap();
        let ids = |r: &KeyRegistry| r.entities().map(|e| e.id).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
        assert_ne!(ids(&a), ids(&KeyRegistry::provision(2, 100).unwrap()));
    }

    #[test]
    fn assemble_rejects_missing_link() {
        let reg = KeyRegistry::provision(1, 1).unwrap();
        let entities: Vec<_> = reg.entities().cloned().collect();
        let links: Vec<_> = reg
            .links()
            .filter(|((a, b), _)| !(*a == reg.is() || *b == reg.is()) || (*a == reg.bs() || *b == reg.bs()))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        let err = KeyRegistry::assemble(reg.curve.clone(), reg.field.clone(), 3, entities, links).unwrap_err();
        assert!(matches!(err, ProtocolError::MissingLink(..)));
    }
}
