//! Run records (JSON lines), timing sidecars and policy files.
//!
//! Run directory layout:
//!
//! - `config.toml`: the resolved configuration the run used
//! - `run.jsonl`: one record per line, flushed as soon as it is written
//! - `timings.jsonl`: wall-clock seconds per record (kept apart so `run.jsonl`
//!   is byte-identical across reruns)
//! - `policy.json`: the final policy

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bayrn_core::bayrn::{BaselineOutcome, RunEvent, RunObserver};
use bayrn_core::policy::PolicyKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const RUN_FILE: &str = "run.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const POLICY_FILE: &str = "policy.json";

/// Append-only JSON-lines file.
pub struct JsonlWriter {
    path: PathBuf,
    file: File,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| LabError::io(path, e))?;
        Ok(JsonlWriter { path: path.to_path_buf(), file })
    }

    pub fn append_to(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| LabError::io(path, e))?;
        Ok(JsonlWriter { path: path.to_path_buf(), file })
    }

    /// Writes one record and its newline in a single call, then flushes.
    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut line = serde_json::to_vec(value).map_err(|e| LabError::record(&self.path, e))?;
        line.push(b'\n');
        self.file.write_all(&line).and_then(|_| self.file.flush()).map_err(|e| LabError::io(&self.path, e))
    }
}

/// Reads every record of a JSON-lines file.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LabError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| LabError::record(path, format!("line {}: {e}", i + 1)))?;
        out.push(value);
    }
    Ok(out)
}

/// Loads the events of an interrupted run. A trailing line without its
/// newline is a record cut off mid-write; it is dropped and the file is
/// truncated to the last complete record.
pub fn recover_events(path: &Path) -> Result<Vec<RunEvent>> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if complete < bytes.len() {
        let file = OpenOptions::new().write(true).open(path).map_err(|e| LabError::io(path, e))?;
        file.set_len(complete as u64).map_err(|e| LabError::io(path, e))?;
    }
    read_jsonl(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bayrn,
    Udr,
    Nominal,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bayrn => "bayrn",
            Method::Udr => "udr",
            Method::Nominal => "nominal",
        }
    }
}

/// The single record of a UDR or nominal run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub method: Method,
    #[serde(flatten)]
    pub outcome: BaselineOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Timing<'a> {
    record: usize,
    event: &'a str,
    seconds: f64,
}

fn event_name(e: &RunEvent) -> &'static str {
    match e {
        RunEvent::InitCandidate { .. } => "init_candidate",
        RunEvent::BoIteration { .. } => "bo_iteration",
        RunEvent::Final { .. } => "final",
    }
}

/// Streams events to `run.jsonl`, timings to `timings.jsonl` and a short
/// progress line to stderr.
pub struct RecordObserver {
    run: JsonlWriter,
    timings: JsonlWriter,
    written: usize,
    since: Instant,
    pub quiet: bool,
}

impl RecordObserver {
    /// `existing` is the number of records already in the files (resume).
    pub fn open(dir: &Path, existing: usize) -> Result<Self> {
        let (run, timings) = if existing == 0 {
            (JsonlWriter::create(&dir.join(RUN_FILE))?, JsonlWriter::create(&dir.join(TIMINGS_FILE))?)
        } else {
            (JsonlWriter::append_to(&dir.join(RUN_FILE))?, JsonlWriter::append_to(&dir.join(TIMINGS_FILE))?)
        };
        Ok(RecordObserver { run, timings, written: existing, since: Instant::now(), quiet: false })
    }

    fn record(&mut self, event: &RunEvent) -> Result<()> {
        self.run.write(event)?;
        let seconds = self.since.elapsed().as_secs_f64();
        self.since = Instant::now();
        self.timings.write(&Timing { record: self.written, event: event_name(event), seconds })?;
        self.written += 1;
        if !self.quiet {
            eprintln!("{}", progress_line(event, seconds));
        }
        Ok(())
    }
}

impl RunObserver for RecordObserver {
    fn on_event(&mut self, event: &RunEvent) -> bayrn_core::Result<()> {
        self.record(event).map_err(|e| bayrn_core::Error::Observer(e.to_string()))
    }
}

fn progress_line(event: &RunEvent, seconds: f64) -> String {
    let (label, c) = match event {
        RunEvent::InitCandidate { index, candidate } => (format!("init {index}"), candidate),
        RunEvent::BoIteration { iteration, candidate, .. } => (format!("iter {iteration}"), candidate),
        RunEvent::Final { candidate, .. } => ("final".to_string(), candidate),
    };
    format!("{label:>8}  phi={:?}  J_sim={:.2}  J_hat={:.2}  ({seconds:.1}s)", c.phi, c.j_sim, c.j_hat)
}

/// A trained policy plus what is needed to re-evaluate it on the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub kind: PolicyKind,
    pub dim: usize,
    pub theta: Vec<f64>,
    /// Seed of the logged target evaluation.
    pub eval_seed: u64,
    pub n_tau: usize,
    pub gamma: f64,
    /// Logged mean target return.
    pub j_hat: f64,
}

impl PolicyFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| LabError::record(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let p: PolicyFile = serde_json::from_str(&text).map_err(|e| LabError::record(path, e))?;
        if p.theta.len() != p.dim {
            return Err(LabError::record(path, format!("dim header says {}, theta has {} values", p.dim, p.theta.len())));
        }
        Ok(p)
    }
}
