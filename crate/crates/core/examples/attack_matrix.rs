//! Runs the honest baseline and each attack scenario, then prints the
//! detection matrix.

use std::time::Instant;

use medsentry::netsim::{presets, run, unmet_expectations};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    println!("{:<14} {:>8} {:>9} {:>7} {:>9} {:>9} {:>9}  status", "scenario", "sessions", "completed", "alarms", "rejected", "injected", "detected");
    for cfg in presets::suite(seed) {
        let t = Instant::now();
        let m = run(&cfg)?;
        let unmet = unmet_expectations(&cfg, &m);
        println!(
            "{:<14} {:>8} {:>9} {:>7} {:>9} {:>9} {:>9}  {} ({:.0?})",
            cfg.name,
            m.sessions,
            m.completed,
            m.alarms,
            m.rejected_total(),
            m.attacks_injected(),
            m.attacks_detected(),
            if unmet.is_empty() { "ok".to_string() } else { unmet.join("; ") },
            t.elapsed()
        );
    }
    Ok(())
}
