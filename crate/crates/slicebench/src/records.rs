//! Experiment records and their append-only JSONL store.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use slicebench_core::metrics::TaskScore;
use slicebench_core::prompt::{LlmResponse, Strategy};
use slicebench_core::slice::{SliceMode, SlicingCriterion};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordKey {
    pub model: String,
    pub mode: SliceMode,
    pub strategy: Strategy,
    pub task_id: String,
    pub run: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFailure {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    #[serde(flatten)]
    pub key: RecordKey,
    pub experiment: String,
    pub program_id: String,
    pub criterion: SlicingCriterion,
    pub prompt_hash: String,
    /// Absent when the call itself failed.
    #[serde(default)]
    pub response: Option<LlmResponse>,
    #[serde(default)]
    pub error: Option<CallFailure>,
    pub truth: BTreeSet<usize>,
    pub score: TaskScore,
    pub latency_ms: u64,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
    pub retry_count: u32,
}

impl ExperimentRecord {
    pub fn predicted(&self) -> Option<&BTreeSet<usize>> {
        self.response.as_ref().and_then(|r| r.slice()).map(|s| &s.lines)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Io { path: path.into(), message: e.to_string() }
}

/// Reads a JSONL file. A missing file reads as empty. An unterminated last
/// line is what an interrupted writer leaves behind; it is ignored and, with
/// `repair`, cut off so the next append starts on a clean line.
pub fn load_jsonl<T: DeserializeOwned>(path: &Path, repair: bool) -> Result<Vec<T>, StoreError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
        Err(e) => return Err(io_err(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() < text.len() {
        tracing::warn!(path = %path.display(), "dropping unterminated trailing record");
        if repair {
            let f = OpenOptions::new().write(true).open(path).map_err(|e| io_err(path, e))?;
            f.set_len(complete.len() as u64).map_err(|e| io_err(path, e))?;
        }
    }
    let mut out = Vec::new();
    for (i, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line).map_err(|e| StoreError::Corrupt { path: path.into(), line: i + 1, message: e.to_string() })?;
        out.push(v);
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<ExperimentRecord>, StoreError> {
    load_jsonl(path, false)
}

/// Single writer; each record is flushed and synced before `append` returns.
pub struct Appender {
    path: PathBuf,
    file: File,
}

impl Appender {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
        file.seek(SeekFrom::End(0)).map_err(|e| io_err(path, e))?;
        Ok(Appender { path: path.into(), file })
    }

    pub fn append<T: Serialize>(&mut self, value: &T) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(value).map_err(|e| io_err(&self.path, e))?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| io_err(&self.path, e))?;
        self.file.sync_data().map_err(|e| io_err(&self.path, e))
    }
}
