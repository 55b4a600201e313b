//! Oracle slices for every task, cached by program hash and criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slicebench_core::dynamic::{dynamic_backward_slice, execute};
use slicebench_core::flow::pdg_from_source;
use slicebench_core::slice::{static_backward_slice, SliceMode, StructuralLines};

use crate::dataset::SliceTask;

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Computes one oracle slice without touching any cache.
pub fn oracle_slice(task: &SliceTask, structural: StructuralLines) -> Result<BTreeSet<usize>, String> {
    let (ast, pdg) = pdg_from_source(&task.program.text, &task.program_id).map_err(|e| e.to_string())?;
    match task.mode {
        SliceMode::Static => static_backward_slice(&ast, &pdg, &task.criterion, structural)
            .map(|s| s.lines)
            .map_err(|e| e.to_string()),
        SliceMode::Dynamic => {
            let trace = execute(&ast, &pdg).map_err(|e| e.to_string())?;
            dynamic_backward_slice(&ast, &trace, task.criterion.line, structural)
                .map(|s| s.lines)
                .map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TruthCache {
    #[serde(skip)]
    path: Option<PathBuf>,
    entries: BTreeMap<String, BTreeSet<usize>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl TruthCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or starts) a cache file. A missing file is an empty cache.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let mut cache = match std::fs::read_to_string(path) {
            Ok(s) => serde_json::from_str(&s).map_err(|e| CacheError::Io { path: path.into(), message: e.to_string() })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => TruthCache::default(),
            Err(e) => return Err(CacheError::Io { path: path.into(), message: e.to_string() }),
        };
        cache.path = Some(path.to_path_buf());
        Ok(cache)
    }

    pub fn save(&self) -> Result<(), CacheError> {
        let Some(path) = &self.path else { return Ok(()) };
        let text = serde_json::to_string_pretty(self).expect("cache serializes");
        std::fs::write(path, text).map_err(|e| CacheError::Io { path: path.clone(), message: e.to_string() })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn key(task: &SliceTask, structural: StructuralLines) -> String {
        let s = match structural {
            StructuralLines::Include => "include",
            StructuralLines::Exclude => "exclude",
        };
        format!("{}|{}|{}|{s}", sha256_hex(&task.program.text), task.mode, task.criterion)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthStats {
    pub computed: usize,
    pub cache_hits: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub slices: BTreeMap<String, BTreeSet<usize>>,
    /// Tasks whose oracle failed, with the reason. The batch carries on.
    pub failures: BTreeMap<String, String>,
}

/// Oracle slices for all tasks. Misses are computed in parallel.
pub fn gen_ground_truth(tasks: &[SliceTask], cache: &mut TruthCache, structural: StructuralLines) -> (GroundTruth, TruthStats) {
    let start = Instant::now();
    let mut out = GroundTruth::default();
    let mut stats = TruthStats::default();
    let mut misses = Vec::new();
    for t in tasks {
        let key = TruthCache::key(t, structural);
        match cache.entries.get(&key) {
            Some(lines) => {
                stats.cache_hits += 1;
                out.slices.insert(t.task_id.clone(), lines.clone());
            }
            None => misses.push((t, key)),
        }
    }
    let computed: Vec<_> = misses.par_iter().map(|(t, key)| (*t, key, oracle_slice(t, structural))).collect();
    for (t, key, result) in computed {
        match result {
            Ok(lines) => {
                stats.computed += 1;
                cache.entries.insert(key.clone(), lines.clone());
                out.slices.insert(t.task_id.clone(), lines);
            }
            Err(e) => {
                stats.failed += 1;
                tracing::warn!(task = %t.task_id, error = %e, "oracle failed");
                out.failures.insert(t.task_id.clone(), e);
            }
        }
    }
    tracing::info!(
        computed = stats.computed,
        cache_hits = stats.cache_hits,
        failed = stats.failed,
        elapsed_ms = start.elapsed().as_millis() as u64,
        "ground truth"
    );
    (out, stats)
}
