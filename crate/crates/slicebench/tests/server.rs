mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use common::*;
use reqwest::StatusCode;
use serde_json::{json, Value};
use slicebench::dataset::ingest_dataset;
use slicebench::gateway::{Gateway, GatewayOptions};
use slicebench::runner::{run_experiment, RunOptions};
use slicebench::server::{router, AppState, Selection, ServeOptions};
use slicebench::truth::{gen_ground_truth, TruthCache};
use slicebench_core::prompt::Strategy;

/// Static tasks of these programs get an answer missing one line.
const FAILING: [&str; 3] = ["p01_pair_count", "p04_collatz_steps", "p07_gcd_lcm"];

fn failing_ids() -> BTreeSet<String> {
    let all = expected_slices();
    FAILING
        .iter()
        .map(|p| all.keys().find(|k| k.starts_with(p) && k.ends_with(".static")).unwrap_or_else(|| panic!("no task for {p}")).clone())
        .collect()
}

/// The truth line left out of a failing answer: the largest one below the criterion.
fn dropped(truth: &BTreeSet<usize>) -> usize {
    let max = *truth.iter().max().unwrap();
    *truth.iter().rev().find(|l| **l != max).unwrap()
}

async fn setup(dir: &Path) -> ServeOptions {
    let fixtures = dir.join("fixtures");
    let failing = failing_ids();
    let truth = expected_slices();
    let base: BTreeMap<String, String> = truth
        .iter()
        .map(|(id, t)| {
            let lines = if failing.contains(id) { t.iter().copied().filter(|l| *l != dropped(t)).collect() } else { t.clone() };
            (id.clone(), answer(&lines))
        })
        .collect();
    write_fixtures(&fixtures, "baseline", &base);
    let fixed: BTreeMap<String, String> = truth.iter().map(|(id, t)| (id.clone(), answer(t))).collect();
    write_fixtures(&fixtures, "iterative", &fixed);

    let cfg = mock_config(dir, &fixtures, vec![Strategy::ZeroShot, Strategy::OneShotCot], 1);
    let tasks = ingest_dataset(&cfg.dataset).unwrap().tasks;
    let (gt, _) = gen_ground_truth(&tasks, &mut TruthCache::in_memory(), cfg.structural_lines);
    let gw = Gateway::new(GatewayOptions { fixtures: Some(fixtures.clone()), ..Default::default() });
    run_experiment(&cfg, &tasks, &gt, &gw, RunOptions::default()).await.unwrap();
    ServeOptions {
        dataset: cfg.dataset.clone(),
        results: cfg.output.clone(),
        labels: dir.join("labels.jsonl"),
        iterations: dir.join("iterations.jsonl"),
        models: cfg.models.clone(),
        selection: Selection::default(),
        ui_dir: None,
    }
}

async fn start(opts: &ServeOptions) -> String {
    let fixtures = opts.results.parent().unwrap().join("fixtures");
    let gw = Gateway::new(GatewayOptions { fixtures: Some(fixtures), ..Default::default() });
    let state = AppState::load(opts, gw).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(state, opts.ui_dir.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

async fn get(url: &str) -> (StatusCode, Value) {
    let r = reqwest::get(url).await.unwrap();
    (r.status(), r.json().await.unwrap_or(Value::Null))
}

async fn post(url: &str, body: Value) -> (StatusCode, Value) {
    let r = reqwest::Client::new().post(url).json(&body).send().await.unwrap();
    (r.status(), r.json().await.unwrap_or(Value::Null))
}

fn lines(v: &Value) -> BTreeSet<usize> {
    v.as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect()
}

#[tokio::test]
async fn triage_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let opts = setup(dir.path()).await;
    let base = start(&opts).await;
    let failing = failing_ids();
    let truth = expected_slices();

    // the queue defaults to one_shot_cot and lists exactly the failing tasks
    let (s, all) = get(&format!("{base}/api/tasks")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(all.as_array().unwrap().len(), 40);
    let (_, failed) = get(&format!("{base}/api/tasks?failed=true")).await;
    let ids: BTreeSet<String> = failed.as_array().unwrap().iter().map(|t| t["id"].as_str().unwrap().to_string()).collect();
    assert_eq!(ids, failing);

    let id = failing.iter().next().unwrap().clone();
    let t = &truth[&id];
    let (s, detail) = get(&format!("{base}/api/tasks/{id}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(lines(&detail["ground_truth"]), *t);
    assert_eq!(lines(&detail["diff"]["missing"]), BTreeSet::from([dropped(t)]));
    assert!(lines(&detail["diff"]["extra"]).is_empty());
    assert!(detail["source"].as_str().unwrap().contains("class"));

    // unknown tasks, exact matches and reprompts without a label are refused
    assert_eq!(get(&format!("{base}/api/tasks/nope.static")).await.0, StatusCode::NOT_FOUND);
    let ok_id = truth.keys().find(|k| !failing.contains(*k)).unwrap();
    let (s, _) = post(&format!("{base}/api/tasks/{ok_id}/label"), json!({"root_cause": "B1", "locations": ["A1"]})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(&format!("{base}/api/tasks/{id}/reprompt"), json!({})).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    // first reviewer
    let (s, rec) = post(&format!("{base}/api/tasks/{id}/label"), json!({"root_cause": "C2", "locations": ["A2", "A4"], "reviewer": "r1"})).await;
    assert_eq!(s, StatusCode::CREATED, "{rec}");
    assert_eq!(rec["version"], 1);
    let (_, report) = get(&format!("{base}/api/report")).await;
    assert_eq!(report["triage"]["labeled"], 1);
    assert_eq!(report["distribution"]["root_causes"]["C2"], 1);
    assert_eq!(report["distribution"]["locations"]["A2"], 1);
    assert_eq!(report["distribution"]["locations"]["A4"], 1);
    assert_eq!(report["flow_map"].as_array().unwrap().len(), 2);

    // a second reviewer disagrees: stored, but 409 until resolved
    let (s, body) = post(&format!("{base}/api/tasks/{id}/label"), json!({"root_cause": "B2", "locations": ["A2"], "reviewer": "r2"})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(body["labels"].as_array().unwrap().len(), 2);
    let (_, detail) = get(&format!("{base}/api/tasks/{id}")).await;
    assert_eq!(detail["disagreement"], true);
    assert_eq!(post(&format!("{base}/api/tasks/{id}/reprompt"), json!({})).await.0, StatusCode::CONFLICT);
    let (_, report) = get(&format!("{base}/api/report")).await;
    assert_eq!(report["disagreements"], json!([id]));
    assert_eq!(std::fs::read_to_string(&opts.labels).unwrap().lines().count(), 2);

    let (s, _) = post(&format!("{base}/api/tasks/{id}/resolution"), json!({"root_cause": "C2", "locations": ["A2", "A4"], "resolver": "lead"})).await;
    assert_eq!(s, StatusCode::CREATED);
    let (_, detail) = get(&format!("{base}/api/tasks/{id}")).await;
    assert_eq!(detail["disagreement"], false);
    assert_eq!(detail["label"]["root_cause"], "C2");

    // feedback round fixes the answer
    let (s, it) = post(&format!("{base}/api/tasks/{id}/reprompt"), json!({})).await;
    assert_eq!(s, StatusCode::CREATED, "{it}");
    assert_eq!(it["iteration"], 1);
    assert_eq!(it["score"]["exact_match"], true);
    let (_, detail) = get(&format!("{base}/api/tasks/{id}")).await;
    assert_eq!(lines(&detail["prediction"]), *t);
    assert!(lines(&detail["diff"]["missing"]).is_empty());
    assert_eq!(detail["iterations"], 1);
    assert_eq!(detail["current_score"]["acc_d"], 1.0);
    let (_, iters) = get(&format!("{base}/api/tasks/{id}/iterations")).await;
    assert_eq!(iters.as_array().unwrap().len(), 1);
    let (_, report) = get(&format!("{base}/api/report")).await;
    assert_eq!(report["triage"]["fixed_by_reprompt"], 1);
    assert_eq!(report["triage"]["pending"], failing.len() - 1);

    // a second round numbers itself 2
    let (_, it2) = post(&format!("{base}/api/tasks/{id}/reprompt"), json!({})).await;
    assert_eq!(it2["iteration"], 2);

    // everything survives a restart
    let again = start(&opts).await;
    let (_, detail) = get(&format!("{again}/api/tasks/{id}")).await;
    assert_eq!(detail["label"]["root_cause"], "C2");
    assert_eq!(detail["iterations"], 2);
}

#[tokio::test]
async fn selection_can_pick_another_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let mut opts = setup(dir.path()).await;
    opts.selection = Selection { model: None, strategy: Some(Strategy::ZeroShot), run: 0 };
    let base = start(&opts).await;
    let (_, report) = get(&format!("{base}/api/report")).await;
    assert_eq!(report["strategy"], "zero_shot");
    assert_eq!(report["report"]["records"], 80);
    let index = reqwest::get(format!("{base}/")).await.unwrap().text().await.unwrap();
    assert!(index.contains("/api/tasks"));
}

#[tokio::test]
async fn ui_directory_is_served() {
    let dir = tempfile::tempdir().unwrap();
    let mut opts = setup(dir.path()).await;
    let ui = dir.path().join("ui");
    std::fs::create_dir_all(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<h1>triage</h1>").unwrap();
    opts.ui_dir = Some(ui);
    let base = start(&opts).await;
    let body = reqwest::get(format!("{base}/")).await.unwrap().text().await.unwrap();
    assert_eq!(body, "<h1>triage</h1>");
    assert_eq!(get(&format!("{base}/api/tasks?failed=true")).await.1.as_array().unwrap().len(), 3);
}
