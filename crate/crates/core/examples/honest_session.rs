//! One complete authorization: six envelopes, Sec agreed end to end.

use std::time::Instant;

use medsentry::atoms::Timestamp;
use medsentry::policy::Action;
use medsentry::protocol::{Deployment, KeyRegistry, ProtocolConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = KeyRegistry::provision(1, 42)?;
    let mut deployment = Deployment::new(registry, ProtocolConfig::default(), 42);
    let start = Instant::now();
    let trace = deployment.run_session(0, Timestamp(1_000), Action::Store, vec![("heart_rate".into(), "72".into())])?;
    for env in &trace.envelopes {
        println!("{:<7} from {}  {} bytes", env.leg.name(), env.sender, env.wire_len());
    }
    println!("Sec (IS)     {}", trace.is_sec);
    println!("Sec (sensor) {}", trace.result.sec);
    println!("hashes: sensor {}, bs {}", deployment.sensors[0].counters().hashes, deployment.bs.counters().hashes);
    println!("records on RS: {}", deployment.rs.dataset().len());
    println!("elapsed {:?}", start.elapsed());
    Ok(())
}
