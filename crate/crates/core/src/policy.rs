//! SAML-style authorization requests and rule evaluation.
//!
//! A [`PolicyRule`] joins a role condition (who is asking) with attribute
//! conditions on day, time of day and daily access count. Rules are tried in
//! store order and the first rule whose role, recipient and action match
//! decides: `Permit` when every condition holds, `Deny` otherwise. No match is
//! `NotApplicable`; a matched rule that fails validation is `Indeterminate`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::atoms::{EntityId, RequestId, Timestamp, Vtm, WidthError};

pub const MS_PER_DAY: u64 = 86_400_000;
const MS_PER_MINUTE: u64 = 60_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("rule {policy_id}: window start {start} is not before end {end}")]
    Window { policy_id: String, start: TimeOfDay, end: TimeOfDay },
    #[error("rule {policy_id}: max_accesses_per_day must be at least 1")]
    MaxAccesses { policy_id: String },
    #[error("rule has an empty policy_id")]
    EmptyId,
    #[error("unknown weekday {0:?}")]
    Weekday(String),
    #[error("invalid time of day {0:?} (expected HH:MM)")]
    TimeOfDay(String),
    #[error("v_tm: {0}")]
    VtmWidth(#[from] WidthError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("document truncated inside <{element}>")]
    Truncated { element: String },
    #[error("non-canonical document: expected <{expected}>, found <{found}>")]
    NonCanonical { expected: String, found: String },
    #[error("malformed <{element}>: {reason}")]
    Malformed { element: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] =
        [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri, Weekday::Sat, Weekday::Sun];

    pub fn name(self) -> &'static str {
        match self {
            Weekday::Mon => "Mon",
            Weekday::Tue => "Tue",
            Weekday::Wed => "Wed",
            Weekday::Thu => "Thu",
            Weekday::Fri => "Fri",
            Weekday::Sat => "Sat",
            Weekday::Sun => "Sun",
        }
    }

    pub fn weekdays() -> BTreeSet<Weekday> {
        Self::ALL[..5].iter().copied().collect()
    }
}

impl FromStr for Weekday {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let day = match lower.as_str() {
            "mon" | "monday" => Weekday::Mon,
            "tue" | "tuesday" => Weekday::Tue,
            "wed" | "wednesday" => Weekday::Wed,
            "thu" | "thursday" => Weekday::Thu,
            "fri" | "friday" => Weekday::Fri,
            "sat" | "saturday" => Weekday::Sat,
            "sun" | "sunday" => Weekday::Sun,
            _ => return Err(PolicyError::Weekday(s.to_string())),
        };
        Ok(day)
    }
}

impl Serialize for Weekday {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Weekday {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Minutes since midnight; `24:00` is a valid window end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeOfDay(pub u16);

impl TimeOfDay {
    pub fn hm(hours: u16, minutes: u16) -> Self {
        TimeOfDay(hours * 60 + minutes)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for TimeOfDay {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PolicyError::TimeOfDay(s.to_string());
        let (h, m) = s.trim().split_once(':').ok_or_else(err)?;
        let h: u16 = h.parse().map_err(|_| err())?;
        let m: u16 = m.parse().map_err(|_| err())?;
        if m >= 60 || h > 24 || (h == 24 && m != 0) {
            return Err(err());
        }
        Ok(TimeOfDay(h * 60 + m))
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: TimeOfDay,
    pub end: TimeOfDay,
}

impl TimeWindow {
    pub fn all_day() -> Self {
        TimeWindow { start: TimeOfDay(0), end: TimeOfDay(24 * 60) }
    }

    /// Half-open: `start <= t < end`.
    pub fn contains(&self, t: TimeOfDay) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Retrieve,
    Store,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Retrieve => "retrieve",
            Action::Store => "store",
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "retrieve" => Ok(Action::Retrieve),
            "store" => Ok(Action::Store),
            other => Err(format!("unknown action {other:?}")),
        }
    }
}

/// A concrete recipient id, or `"*"` for any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recipient {
    Any,
    Entity(EntityId),
}

impl Recipient {
    pub fn matches(&self, id: &EntityId) -> bool {
        match self {
            Recipient::Any => true,
            Recipient::Entity(e) => e == id,
        }
    }
}

impl Serialize for Recipient {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Recipient::Any => s.serialize_str("*"),
            Recipient::Entity(e) => s.serialize_str(&e.to_hex()),
        }
    }
}

impl<'de> Deserialize<'de> for Recipient {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "*" {
            Ok(Recipient::Any)
        } else {
            EntityId::from_hex(&s).map(Recipient::Entity).map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyRule {
    pub policy_id: String,
    pub sender_role: String,
    pub recipient: Recipient,
    pub allowed_days: BTreeSet<Weekday>,
    pub allowed_window: TimeWindow,
    pub max_accesses_per_day: u32,
    pub action: Action,
}

impl PolicyRule {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.policy_id.is_empty() {
            return Err(PolicyError::EmptyId);
        }
        if self.allowed_window.start >= self.allowed_window.end {
            return Err(PolicyError::Window {
                policy_id: self.policy_id.clone(),
                start: self.allowed_window.start,
                end: self.allowed_window.end,
            });
        }
        if self.max_accesses_per_day == 0 {
            return Err(PolicyError::MaxAccesses { policy_id: self.policy_id.clone() });
        }
        Ok(())
    }

    fn matches(&self, query: &AccessQuery<'_>) -> bool {
        self.sender_role == query.subject_role && self.recipient.matches(&query.recipient) && self.action == query.action
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Permit,
    Deny,
    NotApplicable,
    Indeterminate,
}

pub fn day_index(ts: Timestamp) -> u64 {
    ts.0 / MS_PER_DAY
}

/// The simulated epoch (t = 0) is a Thursday, as in Unix time.
pub fn weekday_of(ts: Timestamp) -> Weekday {
    Weekday::ALL[((day_index(ts) + 3) % 7) as usize]
}

pub fn time_of_day(ts: Timestamp) -> TimeOfDay {
    TimeOfDay(((ts.0 % MS_PER_DAY) / MS_PER_MINUTE) as u16)
}

/// Timestamp for `weekday` of the given simulated week at `time`.
pub fn timestamp_at(week: u64, weekday: Weekday, time: TimeOfDay) -> Timestamp {
    let idx = Weekday::ALL.iter().position(|d| *d == weekday).unwrap() as u64;
    // day 4 of the epoch is the first Monday
    let day = 4 + week * 7 + idx;
    Timestamp(day * MS_PER_DAY + u64::from(time.0) * MS_PER_MINUTE)
}

/// Permits granted per (subject, policy, day). Keys for earlier days stop
/// matching once the day index moves on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessCounter {
    counts: BTreeMap<(EntityId, String, u64), u32>,
}

impl AccessCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, subject: &EntityId, policy_id: &str, day: u64) -> u32 {
        self.counts.get(&(*subject, policy_id.to_string(), day)).copied().unwrap_or(0)
    }

    fn increment(&mut self, subject: &EntityId, policy_id: &str, day: u64) {
        *self.counts.entry((*subject, policy_id.to_string(), day)).or_insert(0) += 1;
    }
}

/// What is being asked for, beyond the request document itself.
#[derive(Clone, Copy, Debug)]
pub struct AccessQuery<'a> {
    pub subject_role: &'a str,
    pub recipient: EntityId,
    pub action: Action,
    pub now: Timestamp,
}

pub fn evaluate(
    store: &[PolicyRule],
    counters: &mut AccessCounter,
    query: &AccessQuery<'_>,
    request: &SamlRequest,
) -> Decision {
    let Some(rule) = store.iter().find(|r| r.matches(query)) else {
        return Decision::NotApplicable;
    };
    if rule.validate().is_err() {
        return Decision::Indeterminate;
    }
    let day = day_index(query.now);
    let day_ok = rule.allowed_days.contains(&weekday_of(query.now));
    let window_ok = rule.allowed_window.contains(time_of_day(query.now));
    let count_ok = counters.get(&request.subject, &rule.policy_id, day) < rule.max_accesses_per_day;
    if day_ok && window_ok && count_ok {
        counters.increment(&request.subject, &rule.policy_id, day);
        Decision::Permit
    } else {
        Decision::Deny
    }
}

/// Attribute names a recipient may see once a request is permitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeRelease {
    pub allowed: BTreeMap<EntityId, BTreeSet<String>>,
}

impl AttributeRelease {
    /// Copy of `request` keeping only attributes released to `recipient`.
    /// Recipients without an entry receive no attributes.
    pub fn filter(&self, request: &SamlRequest, recipient: &EntityId) -> SamlRequest {
        let empty = BTreeSet::new();
        let allowed = self.allowed.get(recipient).unwrap_or(&empty);
        let mut out = request.clone();
        out.attributes.retain(|(name, _)| allowed.contains(name));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamlRequest {
    pub request_id: RequestId,
    pub issuer: EntityId,
    pub subject: EntityId,
    pub v_tm: Vtm,
    pub issue_instant: Timestamp,
    pub attributes: Vec<(String, String)>,
}

/// Source of request ids; seeded so simulations stay reproducible.
pub struct RequestIdSource {
    rng: ChaCha20Rng,
    issued: BTreeSet<RequestId>,
}

impl RequestIdSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha20Rng::seed_from_u64(seed), issued: BTreeSet::new() }
    }

    pub fn next_id(&mut self) -> RequestId {
        loop {
            let mut b = [0u8; 16];
            self.rng.fill_bytes(&mut b);
            let id = RequestId(b);
            if self.issued.insert(id) {
                return id;
            }
        }
    }
}

pub fn create_request(
    ids: &mut RequestIdSource,
    issuer: EntityId,
    subject: EntityId,
    v_tm: &[u8],
    now: Timestamp,
    attributes: Vec<(String, String)>,
) -> Result<SamlRequest, PolicyError> {
    let v_tm = Vtm::from_slice(v_tm)?;
    Ok(SamlRequest { request_id: ids.next_id(), issuer, subject, v_tm, issue_instant: now, attributes })
}

const ROOT: &str = "AuthzRequest";
const ELEMENTS: [&str; 6] = ["RequestID", "Issuer", "Subject", "Vtm", "IssueInstant", "Attributes"];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str, element: &str) -> Result<String, ParseError> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let (rep, len) = [("&amp;", '&'), ("&lt;", '<'), ("&gt;", '>'), ("&quot;", '"')]
            .iter()
            .find(|(ent, _)| tail.starts_with(ent))
            .map(|(ent, c)| (*c, ent.len()))
            .ok_or_else(|| ParseError::Malformed { element: element.into(), reason: "bad entity".into() })?;
        out.push(rep);
        rest = &tail[len..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn serialize_request(req: &SamlRequest) -> Vec<u8> {
    serialize_with_vtm(req, &req.v_tm)
}

/// Canonical bytes with the masked value zeroed. Signatures cover these so
/// the document is bound without a circular dependency on `Vtm`.
pub fn binding_bytes(req: &SamlRequest) -> Vec<u8> {
    serialize_with_vtm(req, &Vtm([0; 64]))
}

fn serialize_with_vtm(req: &SamlRequest, v_tm: &Vtm) -> Vec<u8> {
    let mut s = String::with_capacity(512);
    s.push_str(&format!("<{ROOT}>"));
    s.push_str(&format!("<RequestID>{}</RequestID>", req.request_id.to_hex()));
    s.push_str(&format!("<Issuer>{}</Issuer>", req.issuer.to_hex()));
    s.push_str(&format!("<Subject>{}</Subject>", req.subject.to_hex()));
    s.push_str(&format!("<Vtm>{}</Vtm>", v_tm.to_hex()));
    s.push_str(&format!("<IssueInstant>{}</IssueInstant>", req.issue_instant.0));
    s.push_str("<Attributes>");
    for (name, value) in &req.attributes {
        s.push_str(&format!("<Attribute Name=\"{}\">{}</Attribute>", escape(name), escape(value)));
    }
    s.push_str("</Attributes>");
    s.push_str(&format!("</{ROOT}>"));
    s.into_bytes()
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek_tag(&self) -> Option<&'a str> {
        let body = self.rest.strip_prefix('<')?;
        let end = body.find(['>', ' '])?;
        Some(&body[..end])
    }

    fn open(&mut self, name: &str) -> Result<(), ParseError> {
        let tag = format!("<{name}>");
        if let Some(r) = self.rest.strip_prefix(tag.as_str()) {
            self.rest = r;
            return Ok(());
        }
        match self.peek_tag() {
            Some(found) if ELEMENTS.contains(&found) || found == ROOT || found == "Attribute" => {
                Err(ParseError::NonCanonical { expected: name.into(), found: found.into() })
            }
            _ if self.rest.len() < tag.len() && tag.starts_with(self.rest) => {
                Err(ParseError::Truncated { element: name.into() })
            }
            _ => Err(ParseError::Malformed { element: name.into(), reason: "missing opening tag".into() }),
        }
    }

    fn close(&mut self, name: &str) -> Result<(), ParseError> {
        let tag = format!("</{name}>");
        if let Some(r) = self.rest.strip_prefix(tag.as_str()) {
            self.rest = r;
            Ok(())
        } else if tag.starts_with(self.rest) {
            Err(ParseError::Truncated { element: name.into() })
        } else {
            Err(ParseError::Malformed { element: name.into(), reason: "missing closing tag".into() })
        }
    }

    fn text(&mut self, name: &str) -> Result<&'a str, ParseError> {
        let end = self.rest.find('<').ok_or_else(|| ParseError::Truncated { element: name.into() })?;
        let (t, r) = self.rest.split_at(end);
        self.rest = r;
        Ok(t)
    }

    fn simple(&mut self, name: &str) -> Result<&'a str, ParseError> {
        self.open(name)?;
        let t = self.text(name)?;
        self.close(name)?;
        Ok(t)
    }
}

fn hex_field<T, F>(text: &str, name: &str, parse: F) -> Result<T, ParseError>
where
    F: Fn(&str) -> Result<T, WidthError>,
{
    // Only lowercase hex is canonical.
    if text.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(ParseError::Malformed { element: name.into(), reason: "uppercase hex".into() });
    }
    parse(text).map_err(|e| ParseError::Malformed { element: name.into(), reason: e.to_string() })
}

pub fn parse_request(bytes: &[u8]) -> Result<SamlRequest, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| ParseError::Malformed { element: ROOT.into(), reason: "not UTF-8".into() })?;
    let mut cur = Cursor { rest: text };
    cur.open(ROOT)?;
    let request_id = hex_field(cur.simple("RequestID")?, "RequestID", RequestId::from_hex)?;
    let issuer = hex_field(cur.simple("Issuer")?, "Issuer", EntityId::from_hex)?;
    let subject = hex_field(cur.simple("Subject")?, "Subject", EntityId::from_hex)?;
    let v_tm = hex_field(cur.simple("Vtm")?, "Vtm", Vtm::from_hex)?;
    let instant_text = cur.simple("IssueInstant")?;
    let canonical_number = !instant_text.is_empty()
        && instant_text.bytes().all(|b| b.is_ascii_digit())
        && (instant_text == "0" || !instant_text.starts_with('0'));
    let issue_instant = instant_text
        .parse::<u64>()
        .ok()
        .filter(|_| canonical_number)
        .map(Timestamp)
        .ok_or_else(|| ParseError::Malformed { element: "IssueInstant".into(), reason: "not a decimal u64".into() })?;
    cur.open("Attributes")?;
    let mut attributes = Vec::new();
    while cur.rest.starts_with("<Attribute ") {
        let body = &cur.rest["<Attribute ".len()..];
        let name_part = body
            .strip_prefix("Name=\"")
            .ok_or_else(|| ParseError::Malformed { element: "Attribute".into(), reason: "expected Name".into() })?;
        let q = name_part.find('"').ok_or_else(|| ParseError::Truncated { element: "Attribute".into() })?;
        let name = unescape(&name_part[..q], "Attribute")?;
        let after = name_part[q + 1..]
            .strip_prefix('>')
            .ok_or_else(|| ParseError::Malformed { element: "Attribute".into(), reason: "expected >".into() })?;
        cur.rest = after;
        let value = unescape(cur.text("Attribute")?, "Attribute")?;
        cur.close("Attribute")?;
        attributes.push((name, value));
    }
    cur.close("Attributes")?;
    cur.close(ROOT)?;
    if !cur.rest.is_empty() {
        return Err(ParseError::Malformed { element: ROOT.into(), reason: "trailing bytes".into() });
    }
    let req = SamlRequest { request_id, issuer, subject, v_tm, issue_instant, attributes };
    if serialize_request(&req) != bytes {
        return Err(ParseError::Malformed { element: ROOT.into(), reason: "not in canonical form".into() });
    }
    Ok(req)
}
