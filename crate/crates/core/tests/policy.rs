#[path = "support/oracles.rs"]
mod oracles;

use medsentry::atoms::EntityId;
use medsentry::policy::{
    evaluate, parse_request, serialize_request, timestamp_at, AccessCounter, AccessQuery, Action, Decision, ParseError,
    PolicyRule, TimeOfDay, Weekday, MS_PER_DAY,
};
use medsentry::atoms::Timestamp;
use oracles::{clinic_rule, run_policy_case, subject_request, DAILY_MAX, POLICY_TABLE};
use proptest::prelude::*;

fn query(role: &str, now: Timestamp) -> AccessQuery<'_> {
    AccessQuery { subject_role: role, recipient: EntityId([9; 16]), action: Action::Store, now }
}

#[test]
fn decision_table() {
    for c in &POLICY_TABLE {
        assert_eq!(
            run_policy_case(c),
            c.expected,
            "applies={} day={} window={} count={}",
            c.applies,
            c.day,
            c.window,
            c.count
        );
    }
}

#[test]
fn counter_walk_through() {
    let rule = clinic_rule();
    let mut counters = AccessCounter::new();
    let wed = timestamp_at(0, Weekday::Wed, TimeOfDay::hm(10, 0));
    let req = subject_request(wed);
    let got: Vec<Decision> = (0..3).map(|_| evaluate(&[rule.clone()], &mut counters, &query("sensor", wed), &req)).collect();
    assert_eq!(got, [Decision::Permit, Decision::Permit, Decision::Deny]);

    let thu = Timestamp(wed.0 + MS_PER_DAY);
    assert_eq!(evaluate(&[rule], &mut counters, &query("sensor", thu), &req), Decision::Permit);
}

#[test]
fn deny_does_not_consume_budget() {
    let rule = clinic_rule();
    let mut counters = AccessCounter::new();
    let evening = timestamp_at(0, Weekday::Mon, TimeOfDay::hm(20, 0));
    let req = subject_request(evening);
    for _ in 0..5 {
        assert_eq!(evaluate(&[rule.clone()], &mut counters, &query("sensor", evening), &req), Decision::Deny);
    }
    let morning = timestamp_at(0, Weekday::Mon, TimeOfDay::hm(9, 0));
    assert_eq!(evaluate(&[rule], &mut counters, &query("sensor", morning), &req), Decision::Permit);
}

#[test]
fn window_is_half_open() {
    let rule = clinic_rule();
    for (time, expected) in [
        (TimeOfDay::hm(8, 59), Decision::Deny),
        (TimeOfDay::hm(9, 0), Decision::Permit),
        (TimeOfDay::hm(16, 59), Decision::Permit),
        (TimeOfDay::hm(17, 0), Decision::Deny),
    ] {
        let now = timestamp_at(1, Weekday::Tue, time);
        let got = evaluate(&[rule.clone()], &mut AccessCounter::new(), &query("sensor", now), &subject_request(now));
        assert_eq!(got, expected, "{time}");
    }
}

proptest! {
    #[test]
    fn permits_are_capped_per_day(attempts in 0u32..12, max in 1u32..6, minute in 540u16..1020) {
        let rule = PolicyRule { max_accesses_per_day: max, ..clinic_rule() };
        let now = timestamp_at(0, Weekday::Fri, TimeOfDay(minute));
        let req = subject_request(now);
        let mut counters = AccessCounter::new();
        let permits = (0..attempts)
            .filter(|_| evaluate(&[rule.clone()], &mut counters, &query("sensor", now), &req) == Decision::Permit)
            .count() as u32;
        prop_assert_eq!(permits, attempts.min(max));
    }

    #[test]
    fn not_applicable_iff_nothing_matches(role_idx in 0usize..3, action_store in any::<bool>()) {
        let role = ["sensor", "bs", "is"][role_idx];
        let action = if action_store { Action::Store } else { Action::Retrieve };
        let now = timestamp_at(0, Weekday::Wed, TimeOfDay::hm(10, 0));
        let q = AccessQuery { subject_role: role, recipient: EntityId([9; 16]), action, now };
        let got = evaluate(&[clinic_rule()], &mut AccessCounter::new(), &q, &subject_request(now));
        let matches = role == "sensor" && action == Action::Store;
        prop_assert_eq!(got == Decision::NotApplicable, !matches);
    }
}

#[test]
fn daily_max_matches_table_fixture() {
    assert_eq!(clinic_rule().max_accesses_per_day, DAILY_MAX);
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

#[test]
fn element_reordering_is_rejected() {
    let mut req = subject_request(Timestamp(42));
    req.attributes = vec![("pulse".into(), "61".into())];
    let doc = String::from_utf8(serialize_request(&req)).unwrap();
    let body = doc.strip_prefix("<AuthzRequest>").unwrap().strip_suffix("</AuthzRequest>").unwrap();
    let names = ["RequestID", "Issuer", "Subject", "Vtm", "IssueInstant", "Attributes"];
    let mut parts = Vec::new();
    let mut rest = body;
    for n in names {
        let close = format!("</{n}>");
        let end = rest.find(&close).unwrap() + close.len();
        parts.push(&rest[..end]);
        rest = &rest[end..];
    }
    assert!(rest.is_empty());

    let orders = permutations(&[0, 1, 2, 3, 4, 5]);
    assert_eq!(orders.len(), 720);
    for order in orders {
        let shuffled: String = order.iter().map(|i| parts[*i]).collect();
        let bytes = format!("<AuthzRequest>{shuffled}</AuthzRequest>");
        let parsed = parse_request(bytes.as_bytes());
        if order == [0, 1, 2, 3, 4, 5] {
            assert_eq!(parsed.unwrap(), req);
        } else {
            assert!(matches!(parsed, Err(ParseError::NonCanonical { .. })), "{order:?}: {parsed:?}");
        }
    }
}
