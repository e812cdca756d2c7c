use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::bench::{self, Primitive};
use super::{report, store, HarnessError};
use crate::netsim::{self, presets, unmet_expectations, AttackKind, Metrics, Provisioned, SimConfig};
use crate::policy::PolicyRule;

#[derive(Debug, Parser)]
#[command(name = "medsentry", version, about = "Provision, simulate and benchmark the sensor authorization protocol")]
pub struct Cli {
    /// Data directory for key material, policy and datasets.
    #[arg(long, global = true, env = "MEDSENTRY_HOME", default_value = "medsentry-data")]
    pub home: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate keys, shares, link keys, policy and empty datasets.
    Provision {
        #[arg(long, default_value_t = 3)]
        sensors: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Target directory (defaults to the data directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Run a scenario file or a built-in preset and write metrics CSV.
    Run {
        scenario: Option<PathBuf>,
        /// honest, suite, or an attack name such as mitm.
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        /// Run against this provisioned directory.
        #[arg(long)]
        keystore: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        /// Also write the per-event trace (next to --out, else to stderr).
        #[arg(long)]
        trace: bool,
    },
    /// Time the primitives and write CSV.
    Bench {
        #[arg(long = "primitive", value_enum)]
        primitives: Vec<Primitive>,
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 1024, 4096])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = bench::MIN_ITERATIONS)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Administer the policy store.
    Policy {
        #[command(subcommand)]
        action: PolicyCommand,
    },
    /// Summarize a metrics CSV.
    Report { metrics: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum PolicyCommand {
    /// Add a rule given as JSON, or @file.
    Add { rule: String },
    List,
    Remove { policy_id: String },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn emit(path: Option<&Path>, force: bool, bytes: &[u8], out: &mut dyn Write) -> Result<(), HarnessError> {
    match path {
        Some(p) => {
            if p.exists() && !force {
                return Err(HarnessError::Exists(p.to_path_buf()));
            }
            store::write_atomic(p, bytes)
        }
        None => out.write_all(bytes).map_err(|source| HarnessError::Io { path: "<stdout>".into(), source }),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Provision { sensors, seed, out: dir, force } => {
            if sensors == 0 {
                return Err(HarnessError::Usage("--sensors must be at least 1".into()));
            }
            let dir = dir.unwrap_or(cli.home);
            let reg = store::provision(&dir, sensors, seed, force)?;
            let _ = writeln!(out, "provisioned {} entities ({sensors} sensors) in {}", reg.entities().count(), dir.display());
            Ok(0)
        }
        Command::Run { scenario, preset, keystore, seed, out: path, force, trace } => {
            let (configs, base) = scenarios(scenario.as_deref(), preset.as_deref())?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            csv.write_record(Metrics::csv_header()).expect("in-memory csv");
            let mut trace_lines = Vec::new();
            let mut failures = Vec::new();
            for mut cfg in configs {
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                let dir = keystore.clone().or_else(|| cfg.keystore.as_ref().map(|k| base.join(k)));
                let metrics = match &dir {
                    Some(dir) => {
                        let inputs = load_keystore(dir)?;
                        let output = netsim::run_provisioned(&cfg, inputs, trace)?;
                        store::save_datasets(dir, &output.records, &output.decisions)?;
                        output.metrics
                    }
                    None => {
                        let reg = crate::protocol::KeyRegistry::provision(
                            cfg.topology.nodes_of(netsim::NodeKind::Sensor).len(),
                            cfg.seed,
                        )?;
                        let (p, r) = (reg.default_policy(), reg.default_release());
                        netsim::run_with(&cfg, reg, p, r, trace)?
                    }
                };
                for f in unmet_expectations(&cfg, &metrics) {
                    failures.push(format!("{}: {f}", cfg.name));
                }
                trace_lines.extend(metrics.trace.iter().map(|l| format!("{}\t{l}", cfg.name)));
                csv.write_record(metrics.csv_row()).expect("in-memory csv");
            }
            let bytes = csv.into_inner().expect("in-memory csv");
            emit(path.as_deref(), force, &bytes, out)?;
            if trace {
                let mut text = trace_lines.join("\n");
                text.push('\n');
                match &path {
                    Some(p) => store::write_atomic(&p.with_extension("trace.tsv"), text.as_bytes())?,
                    None => {
                        let _ = err.write_all(text.as_bytes());
                    }
                }
            }
            for f in &failures {
                let _ = writeln!(err, "assertion failed: {f}");
            }
            Ok(if failures.is_empty() { 0 } else { 1 })
        }
        Command::Bench { primitives, sizes, iterations, seed, out: path, force } => {
            if sizes.is_empty() {
                return Err(HarnessError::Usage("--sizes must name at least one size".into()));
            }
            let primitives = if primitives.is_empty() { Primitive::ALL.to_vec() } else { primitives };
            let results = bench::run(&primitives, &sizes, iterations, seed);
            emit(path.as_deref(), force, &bench::to_csv(&results), out)?;
            Ok(0)
        }
        Command::Policy { action } => {
            let home = cli.home;
            let mut rules = store::load_policies(&home)?;
            match action {
                PolicyCommand::Add { rule } => {
                    let text = match rule.strip_prefix('@') {
                        Some(file) => fs::read_to_string(file)
                            .map_err(|source| HarnessError::Io { path: file.into(), source })?,
                        None => rule,
                    };
                    let rule: PolicyRule = serde_json::from_str(&text)
                        .map_err(|e| HarnessError::Format { path: "<rule>".into(), reason: e.to_string() })?;
                    rule.validate()?;
                    if rules.iter().any(|r| r.policy_id == rule.policy_id) {
                        return Err(HarnessError::Usage(format!("policy {} already exists", rule.policy_id)));
                    }
                    let _ = writeln!(out, "added {}", rule.policy_id);
                    rules.push(rule);
                    store::save_policies(&home, &rules)?;
                }
                PolicyCommand::List => {
                    for r in &rules {
                        let _ = writeln!(out, "{}", serde_json::to_string(r).expect("rule serializes"));
                    }
                }
                PolicyCommand::Remove { policy_id } => {
                    let before = rules.len();
                    rules.retain(|r| r.policy_id != policy_id);
                    if rules.len() == before {
                        return Err(HarnessError::Usage(format!("no policy {policy_id}")));
                    }
                    store::save_policies(&home, &rules)?;
                    let _ = writeln!(out, "removed {policy_id}");
                }
            }
            Ok(0)
        }
        Command::Report { metrics } => {
            let text = fs::read_to_string(&metrics).map_err(|source| HarnessError::Io { path: metrics.clone(), source })?;
            let rows = report::parse(&text)?;
            let _ = write!(out, "{}", report::render(&rows));
            Ok(0)
        }
    }
}

fn load_keystore(dir: &Path) -> Result<Provisioned, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::Keystore(format!("directory {} does not exist", dir.display())));
    }
    store::check_dataset_split(dir)?;
    store::load(dir)
}

fn scenarios(file: Option<&Path>, preset: Option<&str>) -> Result<(Vec<SimConfig>, PathBuf), HarnessError> {
    match (file, preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
            let cfg = SimConfig::from_json(&text).map_err(|e| HarnessError::Format {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
            Ok((vec![cfg], path.parent().map(Path::to_path_buf).unwrap_or_default()))
        }
        (None, Some(name)) => {
            let configs = match name {
                "suite" => presets::suite(1),
                "honest" => vec![presets::honest(1)],
                other => {
                    let kind = AttackKind::ALL.into_iter().find(|k| k.name() == other.replace('-', "_")).ok_or_else(|| {
                        HarnessError::Usage(format!("unknown preset {other:?}; try honest, suite or an attack name"))
                    })?;
                    vec![presets::for_kind(kind, 1)]
                }
            };
            Ok((configs, PathBuf::new()))
        }
        (None, None) => Err(HarnessError::Usage("give a scenario file or --preset".into())),
    }
}
