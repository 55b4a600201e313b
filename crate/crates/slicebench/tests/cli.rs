mod common;

use std::collections::BTreeSet;
use std::process::Command;

use common::*;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_slicebench"));
    c.env_remove("SLICEBENCH_MODEL");
    c
}

fn run_ok(c: &mut Command) -> String {
    let out = c.output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn output_lines(text: &str) -> BTreeSet<usize> {
    let v: Value = serde_json::from_str(text.trim()).unwrap();
    v["output"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().parse().unwrap()).collect()
}

fn criterion(id: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(corpus_dir().join(format!("criteria/{id}.json"))).unwrap()).unwrap()
}

#[test]
fn slice_commands_reproduce_the_hand_slices() {
    let expected = expected_slices();
    for id in ["p05_binary_search", "p16_factorial", "p18_first_negative"] {
        let file = corpus_dir().join(format!("programs/{id}.java"));
        let c = criterion(id);
        let s = run_ok(bin().arg("slice-static").arg(&file).args([
            "--var",
            c["static"]["variable"].as_str().unwrap(),
            "--line",
            &c["static"]["line"].to_string(),
        ]));
        assert_eq!(output_lines(&s), expected[&format!("{id}.static")], "{id}");
        let d = run_ok(bin().arg("slice-dynamic").arg(&file).args(["--line", &c["dynamic"]["line"].to_string()]));
        assert_eq!(output_lines(&d), expected[&format!("{id}.dynamic")], "{id}");
    }
}

#[test]
fn dumps() {
    let file = corpus_dir().join("programs/p06_digit_sum.java");
    let dot = run_ok(bin().arg("slice-static").arg(&file).args(["--var", "x", "--line", "1", "--dump-pdg"]));
    assert!(dot.starts_with("digraph"), "{dot}");
    let trace = run_ok(bin().arg("slice-dynamic").arg(&file).args(["--line", "1", "--dump-trace"]));
    let entries: Vec<Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!entries.is_empty());
    assert!(entries.windows(2).all(|w| w[0]["seq"].as_u64() < w[1]["seq"].as_u64()));
}

#[test]
fn bad_criterion_fails_with_a_message() {
    let file = corpus_dir().join("programs/p06_digit_sum.java");
    let out = bin().arg("slice-static").arg(&file).args(["--var", "nosuchvar", "--line", "3"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuchvar"));
}

#[test]
fn ingest_run_score_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let manifest: Value = serde_json::from_str(&run_ok(bin().arg("ingest").arg(corpus_dir()))).unwrap();
    assert_eq!(manifest["static_tasks"], 20);

    let truth_path = dir.path().join("truth.json");
    run_ok(bin().arg("ground-truth").arg(corpus_dir()).arg("--out").arg(&truth_path));
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(&truth_path).unwrap()).unwrap();
    assert_eq!(truth["slices"].as_object().unwrap().len(), 40);

    let fixtures = dir.path().join("fixtures");
    let answers = expected_slices().iter().map(|(id, t)| (id.clone(), answer(t))).collect();
    write_fixtures(&fixtures, "baseline", &answers);
    let cfg = serde_json::json!({
        "dataset": corpus_dir(),
        "output": "results.jsonl",
        "fixtures": "fixtures",
        "runs": 1,
        "strategies": ["zero_shot"],
        "models": [{"name": "m", "endpoint": "mock", "api_key_ref": "K", "temperature": 0.0,
                    "context_window": 8192, "max_retries": 0, "timeout_secs": 5}]
    });
    let cfg_path = dir.path().join("exp.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let rep: Value = serde_json::from_str(&run_ok(bin().arg("run").arg("--config").arg(&cfg_path).args(["--stop-after", "5"]))).unwrap();
    assert_eq!(rep["executed"], 5);
    let rep: Value = serde_json::from_str(&run_ok(bin().arg("run").arg("--config").arg(&cfg_path))).unwrap();
    assert_eq!((rep["already_present"].as_u64(), rep["executed"].as_u64()), (Some(5), Some(35)));

    let results = dir.path().join("results.jsonl");
    let a = run_ok(bin().arg("score").arg("--in").arg(&results));
    let b = run_ok(bin().arg("score").arg("--in").arg(&results));
    assert_eq!(a, b);
    let report: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["table"][0]["static"]["acc_d"], 100.0);
    let edges = bin().arg("score").arg("--in").arg(&results).args(["--acc-d", "edges"]).output().unwrap();
    assert!(!edges.status.success());
    run_ok(bin().arg("score").arg("--in").arg(&results).args(["--acc-d", "edges", "--grouping", "per-program", "--dataset"]).arg(corpus_dir()));
}
