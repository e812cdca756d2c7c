//! File-backed front end: provisioning, scenario runs, policy
//! administration, benchmarks and reports.

pub mod bench;
pub mod cli;
pub mod report;
pub mod store;

use std::path::PathBuf;

use thiserror::Error;

use crate::netsim::SimError;
use crate::policy::PolicyError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error("{} already exists; pass --force to overwrite", .0.display())]
    Exists(PathBuf),
    #[error("keystore: {0}")]
    Keystore(String),
    #[error("metrics schema: {0}")]
    Schema(String),
    #[error("dataset split violated: {0}")]
    DatasetSplit(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
