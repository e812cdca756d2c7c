//! Text summary of a metrics CSV.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::HarnessError;
use crate::netsim::metrics::Metrics;
use crate::netsim::AttackKind;

/// Reference envelope bit count, printed beside the measured figure.
pub const REFERENCE_BITS: u64 = 253;

pub type Row = BTreeMap<String, u64>;

/// Parses a CSV written by `run`, insisting on every column it writes.
pub fn parse(text: &str) -> Result<Vec<(String, Row)>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> =
        reader.headers().map_err(|e| HarnessError::Schema(e.to_string()))?.iter().map(String::from).collect();
    let missing: Vec<String> = Metrics::csv_header().into_iter().filter(|c| !header.contains(c)).collect();
    if !missing.is_empty() {
        return Err(HarnessError::Schema(format!("missing columns: {}", missing.join(", "))));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Schema(e.to_string()))?;
        let mut row = Row::new();
        let mut run_id = String::new();
        for (col, value) in header.iter().zip(rec.iter()) {
            if col == "run_id" {
                run_id = value.to_string();
            } else {
                let n = value
                    .parse()
                    .map_err(|_| HarnessError::Schema(format!("row {}: {col} = {value:?} is not a count", line + 1)))?;
                row.insert(col.clone(), n);
            }
        }
        rows.push((run_id, row));
    }
    Ok(rows)
}

fn per(n: u64, d: u64) -> String {
    if d == 0 {
        "-".into()
    } else {
        format!("{:.2}", n as f64 / d as f64)
    }
}

pub fn render(rows: &[(String, Row)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Detection matrix (detected/injected)");
    let _ = write!(out, "{:<16}", "run");
    for k in AttackKind::ALL {
        let _ = write!(out, " {:>14}", k.name());
    }
    let _ = writeln!(out, " {:>6}", "all");
    let mut all_detected = true;
    for (run, r) in rows {
        let _ = write!(out, "{run:<16}");
        let mut ok = true;
        for k in AttackKind::ALL {
            let inj = r[&format!("injected_{k}")];
            let det = r[&format!("detected_{k}")];
            ok &= det == inj;
            let cell = if inj == 0 { "-".to_string() } else { format!("{det}/{inj}") };
            let _ = write!(out, " {cell:>14}");
        }
        all_detected &= ok;
        let _ = writeln!(out, " {:>6}", if ok { "yes" } else { "NO" });
    }
    let _ = writeln!(out, "all attacks detected: {}", if all_detected { "yes" } else { "no" });

    let _ = writeln!(out, "\nCost per session");
    let _ = writeln!(
        out,
        "{:<16} {:>9} {:>9} {:>13} {:>10} {:>12} {:>10}",
        "run", "sessions", "completed", "hashes sensor", "hashes bs", "envelopes", "bits"
    );
    for (run, r) in rows {
        let _ = writeln!(
            out,
            "{run:<16} {:>9} {:>9} {:>13} {:>10} {:>12} {:>10}",
            r["sessions"],
            r["completed"],
            per(r["hashes_sensor"], r["sessions"]),
            per(r["hashes_bs"], r["sessions"]),
            per(r["envelopes"], r["completed"]),
            per(r["wire_bits"], r["sessions"]),
        );
    }
    let _ = writeln!(out, "bits: wire bits of all envelopes per session (reference figure {REFERENCE_BITS}, not compared)");
    out
}
