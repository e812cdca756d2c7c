//! On-disk deployment: key material, policy and the two separate datasets.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::atoms::EntityId;
use crate::cipher::AesKey192;
use crate::netsim::Provisioned;
use crate::policy::{AttributeRelease, PolicyRule};
use crate::protocol::{DecisionRecord, EntityKeys, KeyRegistry, PatientRecord, Role};
use crate::sharing::{PrimeField, Share};
use crate::sign::{CurveParams, KeyPair, Point};

pub const KEYSTORE: &str = "keystore.csv";
pub const SHARES: &str = "shares.csv";
pub const LINKS: &str = "links.csv";
pub const DEPLOYMENT: &str = "deployment.json";
pub const POLICY: &str = "policy.jsonl";
pub const RELEASE: &str = "release.json";
pub const IS_STORE: &str = "is_store.json";
pub const RS_STORE: &str = "rs_store.json";

/// Field names an IS store record may carry.
const IS_FIELDS: [&str; 10] =
    ["entities", "decisions", "entity_id", "role", "public_point", "request_id", "subject", "action", "decision", "at"];

#[derive(Debug, Serialize, Deserialize)]
struct KeystoreRow {
    entity_id: String,
    private_scalar: String,
    public_point: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ShareRow {
    entity_id: String,
    x: String,
    y: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkRow {
    a: String,
    b: String,
    key: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentFile {
    pub seed: u64,
    pub curve: String,
    pub field_modulus: String,
    pub threshold: usize,
    pub bs: EntityId,
    pub is: EntityId,
    pub rs: EntityId,
    pub sensors: Vec<EntityId>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderRecord {
    pub entity_id: EntityId,
    pub role: Role,
    pub public_point: String,
}

/// What IS keeps: provider records and its decision log.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoStore {
    pub entities: Vec<ProviderRecord>,
    pub decisions: Vec<DecisionRecord>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    serde_json::from_str(&read(path)?).map_err(|e| HarnessError::Format { path: path.to_path_buf(), reason: e.to_string() })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn csv_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let text = read(path)?;
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Format { path: path.to_path_buf(), reason: e.to_string() })
}

/// Generates a deployment and writes it to `dir`.
pub fn provision(dir: &Path, n_sensors: usize, seed: u64, force: bool) -> Result<KeyRegistry, HarnessError> {
    if dir.exists() && !force {
        return Err(HarnessError::Exists(dir.to_path_buf()));
    }
    let reg = KeyRegistry::provision(n_sensors, seed)?;
    let width = reg.curve.field_bytes();
    let order: Vec<EntityId> = reg.sensors().iter().copied().chain([reg.bs(), reg.is(), reg.rs()]).collect();
    let entities: Vec<&EntityKeys> = order.iter().map(|id| reg.keys(id)).collect::<Result<_, _>>()?;

    let keystore = entities.iter().map(|e| KeystoreRow {
        entity_id: e.id.to_hex(),
        private_scalar: hex::encode(crate::sign::fixed_be(&e.keypair.private, width)),
        public_point: hex::encode(e.keypair.public.to_uncompressed(width)),
    });
    write_atomic(&dir.join(KEYSTORE), &csv_bytes(keystore))?;

    let shares = entities.iter().flat_map(|e| {
        e.shares.iter().map(|s| ShareRow {
            entity_id: e.id.to_hex(),
            x: s.x.value().to_str_radix(16),
            y: s.y.value().to_str_radix(16),
        })
    });
    write_atomic(&dir.join(SHARES), &csv_bytes(shares))?;

    let links = reg.links().map(|((a, b), k)| LinkRow { a: a.to_hex(), b: b.to_hex(), key: hex::encode(k.as_bytes()) });
    write_atomic(&dir.join(LINKS), &csv_bytes(links))?;

    let deployment = DeploymentFile {
        seed,
        curve: "p256".into(),
        field_modulus: reg.field.modulus().to_str_radix(16),
        threshold: reg.threshold,
        bs: reg.bs(),
        is: reg.is(),
        rs: reg.rs(),
        sensors: reg.sensors().to_vec(),
    };
    write_json(&dir.join(DEPLOYMENT), &deployment)?;
    save_policies(dir, &reg.default_policy())?;
    write_json(&dir.join(RELEASE), &reg.default_release())?;

    let info = InfoStore {
        entities: entities
            .iter()
            .map(|e| ProviderRecord {
                entity_id: e.id,
                role: e.role,
                public_point: hex::encode(e.keypair.public.to_uncompressed(width)),
            })
            .collect(),
        decisions: Vec::new(),
    };
    write_json(&dir.join(IS_STORE), &info)?;
    write_json(&dir.join(RS_STORE), &Vec::<PatientRecord>::new())?;
    Ok(reg)
}

fn hex_id(s: &str, path: &Path) -> Result<EntityId, HarnessError> {
    EntityId::from_hex(s).map_err(|e| HarnessError::Format { path: path.to_path_buf(), reason: format!("entity id {s:?}: {e}") })
}

fn hex_uint(s: &str, path: &Path) -> Result<BigUint, HarnessError> {
    BigUint::parse_bytes(s.as_bytes(), 16)
        .ok_or_else(|| HarnessError::Format { path: path.to_path_buf(), reason: format!("{s:?} is not hex") })
}

/// Reads key material back and validates it as a deployment.
pub fn load_registry(dir: &Path) -> Result<KeyRegistry, HarnessError> {
    if !dir.join(KEYSTORE).is_file() {
        return Err(HarnessError::Keystore(format!("{} has no {KEYSTORE}; run `provision` first", dir.display())));
    }
    let dep_path = dir.join(DEPLOYMENT);
    let dep: DeploymentFile = json(&dep_path)?;
    if dep.curve != "p256" {
        return Err(HarnessError::Format { path: dep_path, reason: format!("unsupported curve {:?}", dep.curve) });
    }
    let curve = CurveParams::p256();
    let field = PrimeField::new(hex_uint(&dep.field_modulus, &dep_path)?);
    let ks_path = dir.join(KEYSTORE);
    let sh_path = dir.join(SHARES);
    let shares: Vec<ShareRow> = csv_rows(&sh_path)?;
    let mut entities = Vec::new();
    for row in csv_rows::<KeystoreRow>(&ks_path)? {
        let id = hex_id(&row.entity_id, &ks_path)?;
        let role = if id == dep.bs {
            Role::Bs
        } else if id == dep.is {
            Role::Is
        } else if id == dep.rs {
            Role::Rs
        } else if dep.sensors.contains(&id) {
            Role::Sensor
        } else {
            return Err(HarnessError::Keystore(format!("entity {id} is not part of the deployment")));
        };
        let keypair = KeyPair::from_private(&curve, hex_uint(&row.private_scalar, &ks_path)?)
            .map_err(|e| HarnessError::Keystore(format!("entity {id}: {e}")))?;
        let stored = hex::decode(&row.public_point)
            .ok()
            .and_then(|b| Point::from_uncompressed(&b).ok())
            .ok_or_else(|| HarnessError::Keystore(format!("entity {id}: unreadable public point")))?;
        if stored != keypair.public {
            return Err(HarnessError::Keystore(format!("entity {id}: public point does not match private scalar")));
        }
        let own = shares
            .iter()
            .filter(|s| s.entity_id.eq_ignore_ascii_case(&row.entity_id))
            .map(|s| {
                let x = field.element(hex_uint(&s.x, &sh_path)?).map_err(|e| HarnessError::Keystore(e.to_string()))?;
                let y = field.element(hex_uint(&s.y, &sh_path)?).map_err(|e| HarnessError::Keystore(e.to_string()))?;
                Ok(Share { x, y })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        entities.push(EntityKeys { id, role, keypair, shares: own });
    }
    let listed: BTreeSet<EntityId> = entities.iter().map(|e| e.id).collect();
    let expected: BTreeSet<EntityId> = dep.sensors.iter().copied().chain([dep.bs, dep.is, dep.rs]).collect();
    if listed != expected {
        return Err(HarnessError::Keystore(format!("{KEYSTORE} does not list exactly the deployment's entities")));
    }
    // keep the deployment's sensor order
    entities.sort_by_key(|e| dep.sensors.iter().position(|s| *s == e.id).unwrap_or(usize::MAX));

    let ln_path = dir.join(LINKS);
    let links = csv_rows::<LinkRow>(&ln_path)?
        .into_iter()
        .map(|r| {
            let key = hex::decode(&r.key)
                .ok()
                .and_then(|b| AesKey192::from_slice(&b).ok())
                .ok_or_else(|| HarnessError::Format { path: ln_path.clone(), reason: "link key must be 24 hex bytes".into() })?;
            Ok(((hex_id(&r.a, &ln_path)?, hex_id(&r.b, &ln_path)?), key))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(KeyRegistry::assemble(curve, field, dep.threshold, entities, links)?)
}

pub fn load_policies(dir: &Path) -> Result<Vec<PolicyRule>, HarnessError> {
    let path = dir.join(POLICY);
    if !path.exists() {
        return Ok(Vec::new());
    }
    read(&path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let rule: PolicyRule = serde_json::from_str(line)
                .map_err(|e| HarnessError::Format { path: path.clone(), reason: format!("line {}: {e}", i + 1) })?;
            rule.validate()?;
            Ok(rule)
        })
        .collect()
}

pub fn save_policies(dir: &Path, rules: &[PolicyRule]) -> Result<(), HarnessError> {
    let mut text = String::new();
    for r in rules {
        text.push_str(&serde_json::to_string(r).expect("rule serializes"));
        text.push('\n');
    }
    write_atomic(&dir.join(POLICY), text.as_bytes())
}

pub fn load_release(dir: &Path) -> Result<AttributeRelease, HarnessError> {
    json(&dir.join(RELEASE))
}

pub fn load_records(dir: &Path) -> Result<Vec<PatientRecord>, HarnessError> {
    json(&dir.join(RS_STORE))
}

pub fn load_info(dir: &Path) -> Result<InfoStore, HarnessError> {
    json(&dir.join(IS_STORE))
}

/// Everything a simulation needs from a provisioned directory.
pub fn load(dir: &Path) -> Result<Provisioned, HarnessError> {
    Ok(Provisioned {
        registry: load_registry(dir)?,
        policies: load_policies(dir)?,
        release: load_release(dir)?,
        records: load_records(dir)?,
    })
}

/// Persists a run's datasets: readings to RS, decisions to IS.
pub fn save_datasets(dir: &Path, records: &[PatientRecord], decisions: &[DecisionRecord]) -> Result<(), HarnessError> {
    let mut info = load_info(dir)?;
    info.decisions.extend_from_slice(decisions);
    write_json(&dir.join(RS_STORE), &records)?;
    write_json(&dir.join(IS_STORE), &info)?;
    check_dataset_split(dir)
}

/// Scans the IS store for any field outside its provider-only schema.
pub fn check_dataset_split(dir: &Path) -> Result<(), HarnessError> {
    let path = dir.join(IS_STORE);
    let value: serde_json::Value = json(&path)?;
    let mut stack = vec![&value];
    while let Some(v) = stack.pop() {
        match v {
            serde_json::Value::Object(map) => {
                for (k, child) in map {
                    if !IS_FIELDS.contains(&k.as_str()) {
                        return Err(HarnessError::DatasetSplit(format!("{} holds field {k:?}", path.display())));
                    }
                    stack.push(child);
                }
            }
            serde_json::Value::Array(items) => stack.extend(items),
            _ => {}
        }
    }
    Ok(())
}

/// `MEDSENTRY_HOME`, else `./medsentry-data`.
pub fn default_home() -> PathBuf {
    std::env::var_os("MEDSENTRY_HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("medsentry-data"))
}
