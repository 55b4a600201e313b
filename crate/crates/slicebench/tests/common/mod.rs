#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde_json::Value;
use slicebench::config::ExperimentConfig;
use slicebench::dataset::SliceTask;
use slicebench_core::prompt::{ModelConfig, Strategy};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Hand-derived slices from `corpus/expected`, keyed by task id. These are
/// the independent oracle the pipeline is checked against.
pub fn expected_slices() -> BTreeMap<String, BTreeSet<usize>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(corpus_dir().join("expected")).unwrap() {
        let p = e.unwrap().path();
        let id = p.file_stem().unwrap().to_string_lossy().into_owned();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        for mode in ["static", "dynamic"] {
            let lines = v[mode].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect();
            out.insert(format!("{id}.{mode}"), lines);
        }
    }
    out
}

/// `{"output": [...]}` written by hand, so the test does not lean on the
/// crate's own renderer.
pub fn answer(lines: &BTreeSet<usize>) -> String {
    let items: Vec<String> = lines.iter().map(|l| format!("\"{l}\"")).collect();
    format!("{{\"output\": [{}]}}", items.join(", "))
}

pub fn write_fixtures(root: &Path, experiment: &str, answers: &BTreeMap<String, String>) {
    let dir = root.join(experiment);
    std::fs::create_dir_all(&dir).unwrap();
    for (task, text) in answers {
        std::fs::write(dir.join(format!("{task}.txt")), text).unwrap();
    }
}

pub fn mock_config(dir: &Path, fixtures: &Path, strategies: Vec<Strategy>, runs: u32) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(corpus_dir(), dir.join("results.jsonl"), vec![ModelConfig::mock("gpt-4o")]);
    cfg.fixtures = Some(fixtures.to_path_buf());
    cfg.strategies = strategies;
    cfg.runs = runs;
    cfg
}

pub fn criterion_line(task: &SliceTask) -> usize {
    task.criterion.line
}
