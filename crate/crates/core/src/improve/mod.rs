//! Taxonomy-guided prompt crafting and feedback re-prompting.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::metrics::{ExperimentAggregate, TaskScore};
use crate::prompt::{build_prompt_with_block, LlmResponse, ParseOutcome, PromptSpec, ShotExample, Strategy, TemplateError};
use crate::slice::{render_output, SlicingCriterion};
use crate::taxonomy::{FaultLocation, ModelConstraintKind, RootCause};

const CRAFTED_SOURCE: &str = include_str!("../../templates/Crafted.java");
const CRAFTED_REASONING: &str = include_str!("../../templates/crafted_reasoning.txt");

/// The output-format stanza restated when the previous answer did not parse.
pub const OUTPUT_FORMAT_STANZA: &str = "Output Format:\n\n- An array of line numbers in plain JSON without any markdown in the following format:\n{\"output\": [\"line_number1\", \"line_number2\"]}\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CraftedExample {
    pub code: String,
    pub criterion: SlicingCriterion,
    pub reasoning: String,
    pub output: BTreeSet<usize>,
    pub covered_categories: BTreeSet<RootCause>,
    /// Locations the reasoning explicitly talks about.
    pub location_notes: BTreeSet<FaultLocation>,
}

impl CraftedExample {
    /// Nested loops feeding a conditional assignment.
    pub fn default_static() -> Self {
        CraftedExample {
            code: CRAFTED_SOURCE.to_string(),
            criterion: SlicingCriterion::new_static("best", 15),
            reasoning: CRAFTED_REASONING.trim_end().to_string(),
            output: BTreeSet::from([1, 2, 3, 4, 6, 7, 8, 9, 10, 15]),
            covered_categories: BTreeSet::from([
                RootCause::ComplexControlFlow,
                RootCause::LogicConditional,
                RootCause::LogicLoop,
            ]),
            location_notes: BTreeSet::from([
                FaultLocation::VariableDeclarationsAndAssignments,
                FaultLocation::LoopConstructs,
                FaultLocation::ConditionalStatements,
            ]),
        }
    }

    fn as_shot(&self) -> ShotExample {
        ShotExample {
            code: self.code.clone(),
            criterion: self.criterion.clone(),
            reasoning: Some(self.reasoning.clone()),
            output: self.output.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImproveError {
    #[error("crafted example does not cover {0}")]
    CategoryGap(String),
    #[error("prompt crafting builds on the one-shot chain-of-thought prompt, got {0}")]
    WrongStrategy(Strategy),
    #[error("no failure label recorded for task {0}")]
    MissingLabel(String),
    #[error("no baseline results for {0}")]
    BaselineMissing(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// The chain-of-thought prompt with its example block swapped for `example`.
pub fn craft_enhanced_prompt(spec: &PromptSpec, example: &CraftedExample) -> Result<String, ImproveError> {
    if spec.strategy != Strategy::OneShotCot {
        return Err(ImproveError::WrongStrategy(spec.strategy));
    }
    if !example.covered_categories.contains(&RootCause::ComplexControlFlow) {
        return Err(ImproveError::CategoryGap(RootCause::ComplexControlFlow.name().to_string()));
    }
    if !example.location_notes.contains(&FaultLocation::VariableDeclarationsAndAssignments) {
        return Err(ImproveError::CategoryGap(FaultLocation::VariableDeclarationsAndAssignments.name().to_string()));
    }
    spec.validate()?;
    let block = example.as_shot().render(true);
    Ok(build_prompt_with_block(spec, Some(&block))?)
}

/// Category-level feedback on one failed answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub root_cause: RootCause,
    pub locations: BTreeSet<FaultLocation>,
}

fn root_cause_phrase(rc: RootCause) -> String {
    match rc {
        RootCause::ModelConstraint(_) => format!("root cause: {}", rc.name()),
        _ => format!("root cause: failure to capture {}", rc.name()),
    }
}

fn quote_prior(prior: &LlmResponse) -> String {
    match &prior.parsed {
        ParseOutcome::Slice { slice, .. } => render_output(&slice.lines),
        ParseOutcome::Failure(_) => {
            let raw = prior.raw.trim();
            if raw.is_empty() {
                "(empty answer)".to_string()
            } else {
                raw.to_string()
            }
        }
    }
}

/// Original prompt followed by a feedback stanza about the answer of
/// iteration `iteration - 1`. Ground truth never enters the stanza.
pub fn iterative_reprompt(
    original_prompt: &str,
    prior: &LlmResponse,
    feedback: Option<&Feedback>,
    task_id: &str,
    iteration: u32,
) -> Result<String, ImproveError> {
    let fb = feedback.ok_or_else(|| ImproveError::MissingLabel(task_id.to_string()))?;
    let mut out = String::from(original_prompt);
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&quote_prior(prior));
    out.push_str("\n\n");
    out.push_str(&format!("Feedback (iteration {iteration}, on the answer of iteration {}):\n\n", iteration.saturating_sub(1)));
    out.push_str("The answer above is not a correct slice. A reviewer classified the mistake as follows.\n");
    out.push_str(&format!("- {} ({}, {})\n", root_cause_phrase(fb.root_cause), fb.root_cause.code(), fb.root_cause.group()));
    let locs: Vec<String> = fb.locations.iter().map(|l| format!("{} ({})", l.name(), l.code())).collect();
    out.push_str(&format!("- location: {}\n", locs.join(", ")));
    out.push_str(&format!("- pitfall to avoid: {}.\n\n", fb.root_cause.pitfall()));
    out.push_str("Generate the slice again for the same program and Slicing Criterion, avoiding the pitfall described above.\n\n");
    if fb.root_cause == RootCause::ModelConstraint(ModelConstraintKind::JsonParsing) {
        out.push_str(OUTPUT_FORMAT_STANZA);
        out.push('\n');
    }
    out.push_str("Output:\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub task_id: String,
    pub iteration: u32,
    pub prior_response: LlmResponse,
    pub feedback: Feedback,
    pub prompt: String,
    pub response: LlmResponse,
    pub score: TaskScore,
}

/// Checks that iteration indices per task run 1..k without gaps.
pub fn iterations_consecutive(records: &[IterationRecord]) -> bool {
    let mut by: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for r in records {
        by.entry(&r.task_id).or_default().push(r.iteration);
    }
    by.values_mut().all(|v| {
        v.sort_unstable();
        v.iter().enumerate().all(|(i, n)| *n == i as u32 + 1)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImproveStrategy {
    Crafted,
    Iterative,
}

impl std::str::FromStr for ImproveStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "crafted" => Ok(Self::Crafted),
            "iterative" => Ok(Self::Iterative),
            other => Err(format!("expected crafted or iterative, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub model: String,
    pub strategy: ImproveStrategy,
    /// Accuracy-D percent.
    pub vanilla: f64,
    pub improved: f64,
    pub delta: f64,
}

pub fn improvement_row(strategy: ImproveStrategy, vanilla: &ExperimentAggregate, improved: &ExperimentAggregate) -> ImprovementRow {
    ImprovementRow {
        model: vanilla.model.clone(),
        strategy,
        vanilla: vanilla.acc_d,
        improved: improved.acc_d,
        delta: crate::metrics::round2(improved.acc_d - vanilla.acc_d),
    }
}

/// Reference bars: Accuracy-D for the baseline and both strategies per model.
pub const REFERENCE_IMPROVEMENTS: &str = include_str!("../../data/reference_improvements.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceImprovement {
    pub model: String,
    pub vanilla: f64,
    pub crafted: f64,
    #[serde(default)]
    pub iterative: Option<f64>,
}

pub fn reference_improvements() -> Vec<ReferenceImprovement> {
    #[derive(Deserialize)]
    struct File {
        rows: Vec<ReferenceImprovement>,
    }
    serde_json::from_str::<File>(REFERENCE_IMPROVEMENTS).expect("reference improvements parse").rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::SourceProgram;

    fn spec(strategy: Strategy) -> PromptSpec {
        let p = SourceProgram::new("t", "class A {\n  static int main(String[] a) {\n    int x = 1;\n    return x;\n  }\n}\n");
        PromptSpec::standard(strategy, p, SlicingCriterion::new_static("x", 4))
    }

    #[test]
    fn crafting_requires_cot_and_coverage() {
        let ex = CraftedExample::default_static();
        assert_eq!(craft_enhanced_prompt(&spec(Strategy::OneShot), &ex), Err(ImproveError::WrongStrategy(Strategy::OneShot)));
        let mut gap = ex.clone();
        gap.covered_categories.remove(&RootCause::ComplexControlFlow);
        assert!(matches!(craft_enhanced_prompt(&spec(Strategy::OneShotCot), &gap), Err(ImproveError::CategoryGap(_))));
        let a = craft_enhanced_prompt(&spec(Strategy::OneShotCot), &ex).unwrap();
        assert_eq!(a, craft_enhanced_prompt(&spec(Strategy::OneShotCot), &ex).unwrap());
        assert!(a.contains(ex.reasoning.as_str()));
    }

    #[test]
    fn reprompt_needs_label() {
        let prior = LlmResponse::interpret("{\"output\": [\"4\"]}", &SourceProgram::new("t", "a\nb\nc\nd\n"), &SlicingCriterion::new_static("x", 4));
        assert_eq!(iterative_reprompt("P\n", &prior, None, "t", 1), Err(ImproveError::MissingLabel("t".into())));
    }

    #[test]
    fn reference_rows() {
        let rows = reference_improvements();
        let gpt = rows.iter().find(|r| r.model == "GPT-4o").unwrap();
        assert_eq!((gpt.vanilla, gpt.crafted, gpt.iterative), (60.84, 64.19, Some(64.28)));
        let g35 = rows.iter().find(|r| r.model == "GPT-3.5 Turbo").unwrap();
        assert!((g35.crafted - g35.vanilla - 7.27).abs() < 1e-9);
    }
}
