//! Independent reference computations shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use medsentry::atoms::{EntityId, Timestamp};
use medsentry::hash::HashAlg;
use medsentry::policy::{
    create_request, evaluate, timestamp_at, AccessCounter, AccessQuery, Action, Decision, PolicyRule, Recipient,
    RequestIdSource, SamlRequest, TimeOfDay, TimeWindow, Weekday,
};
use medsentry::sharing::{reconstruct, split_with_rng, FieldElement, MasterSecret, PrimeField, Share};
use medsentry::sign::{keygen, sign, verify, CurveParams, Point, SignatureRS};
use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Feeds the bytes it was given, in order.
pub struct Scripted(pub Vec<u8>);

impl RngCore for Scripted {
    fn next_u32(&mut self) -> u32 {
        let mut b = [0u8; 4];
        self.fill_bytes(&mut b);
        u32::from_be_bytes(b)
    }

    fn next_u64(&mut self) -> u64 {
        let mut b = [0u8; 8];
        self.fill_bytes(&mut b);
        u64::from_be_bytes(b)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for d in dst {
            *d = self.0.remove(0);
        }
    }
}

pub fn gf17() -> PrimeField {
    PrimeField::small(17)
}

pub fn val(e: &FieldElement) -> u64 {
    e.value().iter_u64_digits().next().unwrap_or(0)
}

/// Library split of `secret` with the two random coefficients forced.
pub fn split_exact(secret: u64, a1: u8, a2: u8) -> Vec<Share> {
    let f = gf17();
    let s = MasterSecret(f.element_u64(secret).unwrap());
    let shares = split_with_rng(&f, &s, 5, 3, &mut Scripted(vec![a1, a2])).unwrap();
    for sh in &shares {
        let x = val(&sh.x);
        let expected = (secret + a1 as u64 * x + a2 as u64 * x * x) % 17;
        assert_eq!(val(&sh.y), expected);
    }
    shares
}

pub const TOY: &str = "name = toy17\np = 11\na = 2\nb = 2\ngx = 5\ngy = 1\nq = 13\ncofactor = 1\n";

pub type Affine = Option<(i64, i64)>;

pub fn toy_add(a: Affine, b: Affine) -> Affine {
    const P: i64 = 17;
    let inv = |v: i64| (1..P).find(|i| (v.rem_euclid(P) * i) % P == 1).unwrap();
    match (a, b) {
        (None, q) | (q, None) => q,
        (Some((x1, y1)), Some((x2, y2))) => {
            if x1 == x2 && (y1 + y2) % P == 0 {
                return None;
            }
            let m = if (x1, y1) == (x2, y2) {
                (3 * x1 * x1 + 2) * inv(2 * y1)
            } else {
                (y2 - y1) * inv(x2 - x1)
            }
            .rem_euclid(P);
            let x3 = (m * m - x1 - x2).rem_euclid(P);
            Some((x3, (m * (x1 - x3) - y1).rem_euclid(P)))
        }
    }
}

pub fn toy_mul(k: u64, p: Affine) -> Affine {
    (0..k).fold(None, |acc, _| toy_add(acc, p))
}

pub fn to_point(a: Affine) -> Point {
    match a {
        None => Point::Infinity,
        Some((x, y)) => Point::affine(BigUint::from(x as u64), BigUint::from(y as u64)),
    }
}


pub fn shamir_subsets_reconstruct() {
    let f = gf17();
    for secret in 0..17 {
        for (a1, a2) in [(0, 0), (1, 16), (5, 9), (16, 16)] {
            let shares = split_exact(secret, a1, a2);
            let mut subsets = 0;
            for i in 0..5 {
                for j in i + 1..5 {
                    for k in j + 1..5 {
                        let pick = [shares[i].clone(), shares[j].clone(), shares[k].clone()];
                        assert_eq!(val(&reconstruct(&f, &pick, 3).unwrap().0), secret);
                        subsets += 1;
                    }
                }
            }
            assert_eq!(subsets, 10);
        }
    }
}

pub fn shamir_two_share_secrecy() {
    // For each pair of share positions, every observable (y_i, y_j) must be
    // produced by every secret exactly once across all coefficient choices.
    let mut seen: BTreeMap<(usize, usize, u64, u64), BTreeMap<u64, u32>> = BTreeMap::new();
    for secret in 0..17 {
        for a1 in 0..17u8 {
            for a2 in 0..17u8 {
                let shares = split_exact(secret, a1, a2);
                for i in 0..5 {
                    for j in i + 1..5 {
                        let key = (i, j, val(&shares[i].y), val(&shares[j].y));
                        *seen.entry(key).or_default().entry(secret).or_default() += 1;
                    }
                }
            }
        }
    }
    assert_eq!(seen.len(), 10 * 17 * 17);
    for (key, by_secret) in &seen {
        assert_eq!(by_secret.len(), 17, "{key:?}");
        assert!(by_secret.values().all(|n| *n == 1), "{key:?}");
    }
}

pub fn toy_curve_arithmetic() {
    let curve = CurveParams::parse(TOY).unwrap();
    assert_eq!(curve.p, BigUint::from(17u32));
    let points: BTreeSet<(i64, i64)> =
        (0..17i64).flat_map(|x| (0..17i64).map(move |y| (x, y))).filter(|(x, y)| (y * y - x * x * x - 2 * x - 2).rem_euclid(17) == 0).collect();
    assert_eq!(points.len() + 1, 19);

    let g = Some((5, 1));
    assert_eq!(toy_mul(19, g), None);
    for k in 0..40u64 {
        assert_eq!(curve.mul_base(&BigUint::from(k)), to_point(toy_mul(k, g)), "k = {k}");
    }
    for &a in &points {
        for &b in &points {
            assert_eq!(curve.add(&to_point(Some(a)), &to_point(Some(b))), to_point(toy_add(Some(a), Some(b))));
        }
    }
}

pub fn toy_ecdsa_exhaustive() {
    let curve = CurveParams::parse(TOY).unwrap();
    let g = Some((5, 1));
    for d in 1..19u64 {
        let q_pub = toy_mul(d, g);
        let public = to_point(q_pub);
        for (msg, alg) in [(&b"store"[..], HashAlg::Llw256), (b"retrieve", HashAlg::Sha1), (b"", HashAlg::Llw256)] {
            let e = curve.digest_to_scalar(&alg.digest(msg).unwrap()).iter_u64_digits().next().unwrap_or(0);
            let mut valid = BTreeSet::new();
            for r in 1..19u64 {
                for s in 1..19u64 {
                    let w = (1..19).find(|w| (s * w) % 19 == 1).unwrap();
                    let p = toy_add(toy_mul(e * w % 19, g), toy_mul(r * w % 19, q_pub));
                    let ok = p.is_some_and(|(x, _)| x as u64 % 19 == r);
                    let sig = SignatureRS { r: r.into(), s: s.into() };
                    assert_eq!(verify(&curve, &public, msg, &sig, alg).unwrap(), ok, "d={d} r={r} s={s}");
                    if ok {
                        valid.insert((r, s));
                    }
                }
            }
            let sig = sign(&curve, &BigUint::from(d), msg, alg).unwrap();
            let pair = (sig.r.iter_u64_digits().next().unwrap(), sig.s.iter_u64_digits().next().unwrap());
            assert!(valid.contains(&pair), "signature {pair:?} outside the valid set");
        }
    }
}

pub fn p256_round_trips() {
    let curve = CurveParams::p256();
    let mut rng = ChaCha8Rng::seed_from_u64(0xec);
    for i in 0..1000 {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let kp = keygen(&curve, &seed).unwrap();
        let mut msg = vec![0u8; (rng.next_u32() % 200) as usize];
        rng.fill_bytes(&mut msg);
        let alg = if i % 2 == 0 { HashAlg::Llw256 } else { HashAlg::Sha1 };
        let sig = sign(&curve, &kp.private, &msg, alg).unwrap();
        assert!(verify(&curve, &kp.public, &msg, &sig, alg).unwrap(), "case {i}");
        if i % 10 == 0 {
            msg.push(1);
            assert!(!verify(&curve, &kp.public, &msg, &sig, alg).unwrap());
        }
    }
}


/// One row of the hand-enumerated decision table.
pub struct PolicyCase {
    pub applies: bool,
    pub day: bool,
    pub window: bool,
    pub count: bool,
    pub expected: Decision,
}

const fn case(applies: bool, day: bool, window: bool, count: bool, expected: Decision) -> PolicyCase {
    PolicyCase { applies, day, window, count, expected }
}

use medsentry::policy::Decision::{Deny, NotApplicable, Permit};

pub const POLICY_TABLE: [PolicyCase; 16] = [
    case(true, true, true, true, Permit),
    case(true, true, true, false, Deny),
    case(true, true, false, true, Deny),
    case(true, true, false, false, Deny),
    case(true, false, true, true, Deny),
    case(true, false, true, false, Deny),
    case(true, false, false, true, Deny),
    case(true, false, false, false, Deny),
    case(false, true, true, true, NotApplicable),
    case(false, true, true, false, NotApplicable),
    case(false, true, false, true, NotApplicable),
    case(false, true, false, false, NotApplicable),
    case(false, false, true, true, NotApplicable),
    case(false, false, true, false, NotApplicable),
    case(false, false, false, true, NotApplicable),
    case(false, false, false, false, NotApplicable),
];

pub const DAILY_MAX: u32 = 2;

pub fn clinic_rule() -> PolicyRule {
    PolicyRule {
        policy_id: "clinic-hours".into(),
        sender_role: "sensor".into(),
        recipient: Recipient::Any,
        allowed_days: Weekday::weekdays(),
        allowed_window: TimeWindow { start: TimeOfDay::hm(9, 0), end: TimeOfDay::hm(17, 0) },
        max_accesses_per_day: DAILY_MAX,
        action: Action::Store,
    }
}

pub fn subject_request(now: Timestamp) -> SamlRequest {
    create_request(&mut RequestIdSource::new(3), EntityId([1; 16]), EntityId([2; 16]), &[0; 64], now, vec![]).unwrap()
}

/// Runs one table row from a fresh counter and returns the decision.
pub fn run_policy_case(c: &PolicyCase) -> Decision {
    let rule = clinic_rule();
    let day = if c.day { Weekday::Wed } else { Weekday::Sat };
    let time = if c.window { TimeOfDay::hm(10, 0) } else { TimeOfDay::hm(18, 0) };
    let now = timestamp_at(2, day, time);
    let req = subject_request(now);
    let mut counters = AccessCounter::new();
    if !c.count {
        // exhaust the daily budget through an unrestricted copy of the rule
        let open = PolicyRule { allowed_days: Weekday::ALL.into_iter().collect(), allowed_window: TimeWindow::all_day(), ..rule.clone() };
        let q = AccessQuery { subject_role: "sensor", recipient: EntityId([9; 16]), action: Action::Store, now };
        for _ in 0..DAILY_MAX {
            assert_eq!(evaluate(&[open.clone()], &mut counters, &q, &req), Permit);
        }
    }
    let role = if c.applies { "sensor" } else { "bs" };
    let q = AccessQuery { subject_role: role, recipient: EntityId([9; 16]), action: Action::Store, now };
    evaluate(&[rule], &mut counters, &q, &req)
}
