//! JSON-lines evaluation log and its sidecars.
//!
//! The main log holds a header line and then one record per evaluation. Wall-clock
//! timings go to `<log>.timing.jsonl` and hyperparameter fits to `<log>.fits.jsonl`,
//! which keeps the main log a pure function of the config.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::gp::KernelParams;
use crate::scalarize::WeightVector;

pub const LOG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Loop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    /// Position in the log, counting initial-design points.
    pub t: usize,
    pub phase: Phase,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<WeightVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acq_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub version: u32,
}

impl LogHeader {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Ok(LogHeader {
            config_hash: config.hash()?,
            config: config.clone(),
            version: LOG_VERSION,
        })
    }
}

/// One hyperparameter refit of one objective, keyed by the loop step it preceded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub t: usize,
    pub objective_index: usize,
    pub params: KernelParams,
    pub log_marginal_likelihood: f64,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub t: usize,
    pub wall_ms: f64,
}

pub fn fits_path(log: &Path) -> PathBuf {
    log.with_extension("fits.jsonl")
}

pub fn timing_path(log: &Path) -> PathBuf {
    log.with_extension("timing.jsonl")
}

#[derive(Debug)]
pub struct LogContents {
    pub header: LogHeader,
    pub records: Vec<EvaluationRecord>,
    /// A partially written last line was found and discarded.
    pub dropped_tail: bool,
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedLog {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Splits into complete lines; the bool reports an unterminated trailing fragment.
fn complete_lines(text: &str) -> (Vec<&str>, bool) {
    let mut lines: Vec<&str> = text.split('\n').collect();
    let tail = lines.pop().unwrap_or("");
    (lines, !tail.is_empty())
}

pub fn read_log(path: &Path) -> Result<LogContents> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (lines, dropped_tail) = complete_lines(&text);
    let Some((first, rest)) = lines.split_first() else {
        return Err(malformed(path, "no complete header line"));
    };
    let header: LogHeader =
        serde_json::from_str(first).map_err(|e| malformed(path, format!("bad header: {e}")))?;
    if header.version != LOG_VERSION {
        return Err(malformed(
            path,
            format!("unsupported log version {}", header.version),
        ));
    }
    let recomputed = header.config.hash()?;
    if recomputed != header.config_hash {
        return Err(malformed(
            path,
            format!(
                "header hash {} does not match its config ({recomputed})",
                header.config_hash
            ),
        ));
    }
    let config = &header.config;
    let mut records = Vec::with_capacity(rest.len());
    for (i, line) in rest.iter().enumerate() {
        let record: EvaluationRecord =
            serde_json::from_str(line).map_err(|e| malformed(path, format!("record {i}: {e}")))?;
        let expected_phase = if i < config.n_init {
            Phase::Init
        } else {
            Phase::Loop
        };
        if record.t != i || record.phase != expected_phase {
            return Err(malformed(
                path,
                format!(
                    "record {i} has t = {} and phase {:?}",
                    record.t, record.phase
                ),
            ));
        }
        if record.x.len() != config.dim() || record.y.len() != config.num_objectives() {
            return Err(malformed(
                path,
                format!("record {i} has wrong x or y length"),
            ));
        }
        if record.phase == Phase::Loop && record.lambda.is_none() {
            return Err(malformed(
                path,
                format!("loop record {i} carries no lambda"),
            ));
        }
        records.push(record);
    }
    if records.len() > config.n_init + config.budget {
        return Err(malformed(path, "more records than the budget allows"));
    }
    Ok(LogContents {
        header,
        records,
        dropped_tail,
    })
}

/// Parses every complete line of a sidecar file; a missing file reads as empty.
pub fn read_sidecar<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let (lines, _) = complete_lines(&text);
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| malformed(path, format!("line {i}: {e}")))
        })
        .collect()
}

/// Append-only JSON-lines writer. Each line goes out in a single write.
pub struct JsonlWriter {
    file: File,
    path: PathBuf,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonlWriter {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn append_to(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(JsonlWriter {
            file,
            path: path.to_path_buf(),
        })
    }

    /// Rewrites `path` with exactly `items`, then keeps appending.
    pub fn rewrite<T: Serialize>(path: &Path, items: &[T]) -> Result<Self> {
        let mut w = Self::create(path)?;
        for item in items {
            w.write(item)?;
        }
        Ok(w)
    }

    pub fn write<T: Serialize + ?Sized>(&mut self, item: &T) -> Result<()> {
        let mut line = serde_json::to_string(item)?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .map_err(|e| Error::io(&self.path, e))
    }
}
