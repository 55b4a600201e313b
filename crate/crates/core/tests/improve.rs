use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use slicebench_core::flow::pdg_from_source;
use slicebench_core::improve::*;
use slicebench_core::lang::SourceProgram;
use slicebench_core::prompt::{build_prompt, LlmResponse, PromptSpec, Strategy as PromptStrategy};
use slicebench_core::slice::{render_output, static_backward_slice, SlicingCriterion, StructuralLines};
use slicebench_core::taxonomy::{FaultLocation, ModelConstraintKind, RootCause};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/improve")
}

fn check_golden(name: &str, built: &str) {
    let path = dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, built).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(built, golden, "{name} differs from its golden file");
}

fn branches() -> SourceProgram {
    SourceProgram::new("Branches", std::fs::read_to_string(dir().join("Branches.java")).unwrap())
}

fn spec() -> PromptSpec {
    PromptSpec::standard(PromptStrategy::OneShotCot, branches(), SlicingCriterion::new_static("free", 10))
}

#[test]
fn crafted_example_answer_is_the_oracle_slice() {
    let ex = CraftedExample::default_static();
    let (ast, pdg) = pdg_from_source(&ex.code, "Crafted").unwrap();
    let s = static_backward_slice(&ast, &pdg, &ex.criterion, StructuralLines::Include).unwrap();
    assert_eq!(s.lines, ex.output);
}

#[test]
fn crafted_prompt_golden_and_confined_to_example_block() {
    let ex = CraftedExample::default_static();
    let crafted = craft_enhanced_prompt(&spec(), &ex).unwrap();
    check_golden("crafted_static.txt", &crafted);
    assert!(crafted.contains(&ex.reasoning));
    let vanilla = build_prompt(&spec()).unwrap();
    let head = |s: &str| s[..s.find("Example:\n").unwrap()].to_string();
    let tail = |s: &str| s[s.find("\nTask:\n").unwrap()..].to_string();
    assert_eq!(head(&crafted), head(&vanilla));
    assert_eq!(tail(&crafted), tail(&vanilla));
    assert_ne!(crafted, vanilla);
}

fn truth() -> BTreeSet<usize> {
    let (ast, pdg) = pdg_from_source(&branches().text, "Branches").unwrap();
    static_backward_slice(&ast, &pdg, &SlicingCriterion::new_static("free", 10), StructuralLines::Include).unwrap().lines
}

#[test]
fn missing_else_branch_feedback() {
    let truth = truth();
    assert!(truth.contains(&8));
    // the prior answer forgot the else arm
    let prior_lines: BTreeSet<usize> = truth.iter().copied().filter(|l| *l != 7 && *l != 8).collect();
    let prior = LlmResponse::interpret(render_output(&prior_lines), &branches(), &SlicingCriterion::new_static("free", 10));
    let fb = Feedback { root_cause: RootCause::LogicConditional, locations: [FaultLocation::ConditionalStatements].into() };
    let original = build_prompt(&spec()).unwrap();
    let p = iterative_reprompt(&original, &prior, Some(&fb), "branches", 1).unwrap();
    check_golden("iterative_b1_a1.txt", &p);
    assert!(p.starts_with(&original));
    assert!(p.contains("root cause: failure to capture Conditional Statements"));
    assert!(p.contains(&render_output(&prior_lines)));
    let stanza = &p[original.len()..];
    assert!(!stanza.contains("\"8\"") && !stanza.contains("line 8"));
    assert!(!stanza.contains("Output Format:"));

    let json = Feedback { root_cause: RootCause::ModelConstraint(ModelConstraintKind::JsonParsing), locations: [FaultLocation::VariableDeclarationsAndAssignments].into() };
    let broken = LlmResponse::interpret("{\"output\": [\"3\", ", &branches(), &SlicingCriterion::new_static("free", 10));
    let p = iterative_reprompt(&original, &broken, Some(&json), "branches", 1).unwrap();
    check_golden("iterative_json_parsing.txt", &p);
    assert!(p[original.len()..].contains(OUTPUT_FORMAT_STANZA));

    let p2 = iterative_reprompt(&original, &prior, Some(&fb), "branches", 2).unwrap();
    assert!(p2.contains("Feedback (iteration 2, on the answer of iteration 1)"));
}

#[test]
fn iteration_bookkeeping() {
    let prior = LlmResponse::interpret("x", &branches(), &SlicingCriterion::new_static("free", 10));
    let fb = Feedback { root_cause: RootCause::LogicLoop, locations: [FaultLocation::LoopConstructs].into() };
    let rec = |task: &str, i: u32| IterationRecord {
        task_id: task.into(),
        iteration: i,
        prior_response: prior.clone(),
        feedback: fb.clone(),
        prompt: String::new(),
        response: prior.clone(),
        score: slicebench_core::metrics::score_task(task, None, &[1].into()).unwrap(),
    };
    assert!(iterations_consecutive(&[rec("a", 1), rec("a", 2), rec("b", 1)]));
    assert!(!iterations_consecutive(&[rec("a", 1), rec("a", 3)]));
    assert!(!iterations_consecutive(&[rec("a", 2)]));
}

proptest! {
    /// No ground-truth line missing from the prior answer shows up in the feedback.
    #[test]
    fn feedback_never_leaks_truth(
        keep in prop::collection::vec(any::<bool>(), 12),
        rc in prop::sample::select(RootCause::ALL.to_vec()),
        locs in prop::collection::btree_set(prop::sample::select(FaultLocation::ALL.to_vec()), 1..4),
        iteration in 1u32..4,
    ) {
        let truth = truth();
        let prior_lines: BTreeSet<usize> = truth.iter().copied().zip(&keep).filter(|(_, k)| **k).map(|(l, _)| l).collect();
        prop_assume!(!prior_lines.is_empty());
        let prior = LlmResponse::interpret(render_output(&prior_lines), &branches(), &SlicingCriterion::new_static("free", 10));
        let original = build_prompt(&spec()).unwrap();
        let p = iterative_reprompt(&original, &prior, Some(&Feedback { root_cause: rc, locations: locs }), "t", iteration).unwrap();
        let stanza = &p[original.len()..];
        for missing in truth.difference(&prior_lines) {
            let quoted = format!("\"{missing}\"");
            let named = format!("line {missing}");
            prop_assert!(!stanza.contains(&quoted) && !stanza.contains(&named));
        }
    }
}
