use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::Value;
use slicebench_core::metrics::TaskScore;
use slicebench_core::taxonomy::*;

/// Counts straight from the raw JSONL, without the store.
fn raw_counts() -> (usize, BTreeMap<String, usize>, BTreeMap<String, usize>, BTreeMap<(String, String), usize>) {
    let mut rc = BTreeMap::new();
    let mut loc = BTreeMap::new();
    let mut flows = BTreeMap::new();
    let mut n = 0;
    for line in REFERENCE_LABELS.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        n += 1;
        let r = v["root_cause"].as_str().unwrap().to_string();
        *rc.entry(r.clone()).or_insert(0) += 1;
        for l in v["locations"].as_array().unwrap() {
            let l = l.as_str().unwrap().to_string();
            *loc.entry(l.clone()).or_insert(0) += 1;
            *flows.entry((r.clone(), l)).or_insert(0) += 1;
        }
    }
    (n, rc, loc, flows)
}

#[test]
fn reference_dataset_headline_counts() {
    let store = reference_store();
    let d = distribution(&store).unwrap();
    let (n, rc, loc, _) = raw_counts();
    assert_eq!(d.total, 92);
    assert_eq!(n, 92);
    assert_eq!(d.root_causes[&RootCause::ComplexControlFlow], 39);
    assert_eq!(d.locations[&FaultLocation::VariableDeclarationsAndAssignments], 78);
    assert_eq!(rc["C2"], 39);
    assert_eq!(loc["A4"], 78);
    // the largest root cause and the largest location
    assert_eq!(d.root_causes.iter().max_by_key(|(_, c)| **c).unwrap().0, &RootCause::ComplexControlFlow);
    assert_eq!(d.locations.iter().max_by_key(|(_, c)| **c).unwrap().0, &FaultLocation::VariableDeclarationsAndAssignments);
    assert!((d.root_cause_percent(RootCause::ComplexControlFlow) - 39.0 * 100.0 / 92.0).abs() < 1e-9);
}

#[test]
fn reference_heaviest_flows_leave_complex_control_flow() {
    let triples = flow_map(&reference_store()).unwrap();
    let mut sorted = triples.clone();
    sorted.sort_by_key(|t| std::cmp::Reverse(t.count));
    let top: Vec<(RootCause, FaultLocation)> = sorted[..2].iter().map(|t| (t.root_cause, t.location)).collect();
    assert!(top.contains(&(RootCause::ComplexControlFlow, FaultLocation::LoopConstructs)));
    assert!(top.contains(&(RootCause::ComplexControlFlow, FaultLocation::VariableDeclarationsAndAssignments)));
    let (_, _, _, flows) = raw_counts();
    assert_eq!(triples.len(), flows.len());
    for t in &triples {
        assert_eq!(flows[&(t.root_cause.code().to_string(), t.location.code().to_string())], t.count);
    }
    let csv = flow_csv(&triples);
    assert!(csv.starts_with("source,target,value\n"));
    assert_eq!(csv.lines().count(), triples.len() + 1);
}

#[test]
fn flow_map_small_example() {
    use FaultLocation::*;
    use RootCause::*;
    let scores: BTreeMap<String, TaskScore> = ["a", "b"]
        .iter()
        .map(|id| (id.to_string(), TaskScore { task_id: id.to_string(), exact_match: false, acc_d: 0.5, parse_failed: false }))
        .collect();
    let mut st = LabelStore::new();
    let mk = |task: &str, rc, locs: &[FaultLocation]| FailureLabel {
        task_id: task.into(),
        root_cause: rc,
        locations: locs.iter().copied().collect(),
        reviewer: "r".into(),
        timestamp: "t".into(),
        notes: String::new(),
    };
    st.record_label(mk("a", ComplexControlFlow, &[LoopConstructs, VariableDeclarationsAndAssignments]), &scores).unwrap();
    st.record_label(mk("b", LogicConditional, &[ConditionalStatements]), &scores).unwrap();
    let f = flow_map(&st).unwrap();
    assert_eq!(f.len(), 3);
    assert!(f.iter().all(|t| t.count == 1));
    let again = LabelStore::from_jsonl(&st.to_jsonl()).unwrap();
    assert_eq!(again, st);
}

#[test]
fn unknown_categories_rejected_at_ingestion() {
    let bad = r#"{"record":"label","version":1,"task_id":"x","root_cause":"Z9","locations":["A1"],"reviewer":"r","timestamp":"t"}"#;
    assert!(matches!(LabelStore::from_jsonl(bad), Err(TaxonomyError::Corrupt { line: 1, .. })));
}

fn any_root_cause() -> impl Strategy<Value = RootCause> {
    prop::sample::select(RootCause::ALL.to_vec())
}

fn any_locations() -> impl Strategy<Value = Vec<FaultLocation>> {
    prop::collection::vec(prop::sample::select(FaultLocation::ALL.to_vec()), 1..4)
}

proptest! {
    /// Totals agree for any store state, and no record is ever removed.
    #[test]
    fn conservation(ops in prop::collection::vec((0usize..6, 0usize..3, any_root_cause(), any_locations()), 1..40)) {
        let scores: BTreeMap<String, TaskScore> = (0..6)
            .map(|i| (format!("t{i}"), TaskScore { task_id: format!("t{i}"), exact_match: false, acc_d: 0.3, parse_failed: false }))
            .collect();
        let mut st = LabelStore::new();
        for (k, (task, reviewer, rc, locs)) in ops.iter().enumerate() {
            let before = st.records().len();
            let label = FailureLabel {
                task_id: format!("t{task}"),
                root_cause: *rc,
                locations: locs.iter().copied().collect(),
                reviewer: format!("r{reviewer}"),
                timestamp: format!("{k}"),
                notes: String::new(),
            };
            st.record_label(label, &scores).unwrap();
            prop_assert_eq!(st.records().len(), before + 1);
            // resolve whatever is open so summaries are defined
            for task in st.disagreements() {
                st.record_resolution(Resolution {
                    task_id: task, root_cause: *rc, locations: locs.iter().copied().collect(),
                    resolver: "panel".into(), timestamp: format!("{k}"), notes: String::new(),
                }).unwrap();
            }
            let d = distribution(&st).unwrap();
            let f = flow_map(&st).unwrap();
            prop_assert_eq!(d.root_causes.values().sum::<usize>(), d.total);
            prop_assert_eq!(f.iter().map(|t| t.count).sum::<usize>(), d.locations.values().sum::<usize>());
            let labels = st.effective_labels().unwrap();
            prop_assert_eq!(labels.iter().map(|l| l.locations.len()).sum::<usize>(), d.locations.values().sum::<usize>());
            prop_assert!(f.iter().all(|t| t.count > 0));
        }
    }
}
