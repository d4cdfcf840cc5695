//! File I/O, report envelopes, and the mapping from failures to exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use wgadget::gadget2::GadgetHamiltonian;
use wgadget::model::TargetHamiltonian;
use wgadget::{GadgetError, VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_INTERRUPTED: i32 = 130;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error("cli: cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cli: cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cli: {path} is not valid JSON: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cli: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Gadget(e) => match e {
                GadgetError::Resource { .. }
                | GadgetError::Numeric { .. }
                | GadgetError::Range { .. } => EXIT_RESOURCE,
                _ => EXIT_USAGE,
            },
            CliError::Read { .. } | CliError::Json { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Write { .. } => EXIT_RESOURCE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_target(path: &Path) -> CliResult<TargetHamiltonian> {
    Ok(TargetHamiltonian::from_json_value(&read_json(path)?)?)
}

pub fn read_gadget(path: &Path) -> CliResult<GadgetHamiltonian> {
    serde_json::from_value(read_json(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

/// Report envelope: tool version, command, resolved plan, and the payload.
pub struct Envelope {
    pub command: &'static str,
    pub plan: Value,
    pub runtime_ms: Option<u128>,
}

impl Envelope {
    pub fn new(command: &'static str, plan: impl Serialize) -> Self {
        Self {
            command,
            plan: serde_json::to_value(plan).expect("plans serialize"),
            runtime_ms: None,
        }
    }

    pub fn wrap(&self, report: impl Serialize) -> String {
        let mut v = json!({
            "tool": "wgadget",
            "version": VERSION,
            "command": self.command,
            "plan": self.plan,
            "report": serde_json::to_value(report).expect("reports serialize"),
        });
        if let Some(ms) = self.runtime_ms {
            v["runtime_ms"] = json!(ms);
        }
        serde_json::to_string_pretty(&v).expect("values serialize")
    }
}

pub fn log_plan(command: &str, plan: &Value) {
    tracing::info!(command, plan = %plan, "resolved plan");
}
