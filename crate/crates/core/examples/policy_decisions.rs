//! Evaluate one weekday-hours rule across times, roles and a daily budget.

use medsentry::atoms::{EntityId, Timestamp};
use medsentry::policy::{
    create_request, evaluate, timestamp_at, AccessCounter, AccessQuery, Action, PolicyRule, Recipient, RequestIdSource,
    TimeOfDay, Weekday,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rule: PolicyRule = serde_json::from_str(
        r#"{"policy_id":"ward-7","sender_role":"sensor","recipient":"*",
            "allowed_days":["Mon","Tue","Wed","Thu","Fri"],
            "allowed_window":{"start":"08:00","end":"18:00"},
            "max_accesses_per_day":2,"action":"store"}"#,
    )?;
    rule.validate()?;
    assert_eq!(rule.recipient, Recipient::Any);
    let store = [rule];

    let mut ids = RequestIdSource::new(1);
    let mut counters = AccessCounter::new();
    let cases: [(&str, Weekday, TimeOfDay); 6] = [
        ("sensor", Weekday::Wed, TimeOfDay::hm(10, 0)),
        ("sensor", Weekday::Wed, TimeOfDay::hm(11, 0)),
        ("sensor", Weekday::Wed, TimeOfDay::hm(12, 0)),
        ("sensor", Weekday::Wed, TimeOfDay::hm(19, 0)),
        ("sensor", Weekday::Sun, TimeOfDay::hm(10, 0)),
        ("bs", Weekday::Wed, TimeOfDay::hm(10, 0)),
    ];
    for (role, day, time) in cases {
        let now: Timestamp = timestamp_at(0, day, time);
        let req = create_request(&mut ids, EntityId([1; 16]), EntityId([2; 16]), &[0; 64], now, vec![])?;
        let q = AccessQuery { subject_role: role, recipient: EntityId([3; 16]), action: Action::Store, now };
        println!("{role:<6} {} {time}  {:?}", day.name(), evaluate(&store, &mut counters, &q, &req));
    }
    Ok(())
}
