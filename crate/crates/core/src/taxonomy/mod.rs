//! Failure taxonomy: root causes, fault locations, the label store and its
//! summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::metrics::TaskScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelConstraintKind {
    ContextWindow,
    IntermixedText,
    JsonParsing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RootCause {
    LogicConditional,
    LogicLoop,
    LogicMethodInvocation,
    AmbiguityInCode,
    ComplexControlFlow,
    ModelConstraint(ModelConstraintKind),
}

impl RootCause {
    pub const ALL: [RootCause; 8] = [
        RootCause::LogicConditional,
        RootCause::LogicLoop,
        RootCause::LogicMethodInvocation,
        RootCause::AmbiguityInCode,
        RootCause::ComplexControlFlow,
        RootCause::ModelConstraint(ModelConstraintKind::ContextWindow),
        RootCause::ModelConstraint(ModelConstraintKind::IntermixedText),
        RootCause::ModelConstraint(ModelConstraintKind::JsonParsing),
    ];

    /// Short code used on the wire. Model constraints are D1..D3.
    pub fn code(&self) -> &'static str {
        use ModelConstraintKind::*;
        match self {
            RootCause::LogicConditional => "B1",
            RootCause::LogicLoop => "B2",
            RootCause::LogicMethodInvocation => "B3",
            RootCause::AmbiguityInCode => "C1",
            RootCause::ComplexControlFlow => "C2",
            RootCause::ModelConstraint(ContextWindow) => "D1",
            RootCause::ModelConstraint(IntermixedText) => "D2",
            RootCause::ModelConstraint(JsonParsing) => "D3",
        }
    }

    pub fn name(&self) -> &'static str {
        use ModelConstraintKind::*;
        match self {
            RootCause::LogicConditional => "Conditional Statements",
            RootCause::LogicLoop => "Loops",
            RootCause::LogicMethodInvocation => "Method Invocations",
            RootCause::AmbiguityInCode => "Ambiguity in Code",
            RootCause::ComplexControlFlow => "Complex Control Flow",
            RootCause::ModelConstraint(ContextWindow) => "Model-specific Constraints (context window)",
            RootCause::ModelConstraint(IntermixedText) => "Model-specific Constraints (text intermixed with code)",
            RootCause::ModelConstraint(JsonParsing) => "Model-specific Constraints (JSON parsing)",
        }
    }

    /// Upper grouping: lack of logic understanding, code complexity, model constraints.
    pub fn group(&self) -> &'static str {
        match self {
            RootCause::LogicConditional | RootCause::LogicLoop | RootCause::LogicMethodInvocation => {
                "Lack of Logic Understanding"
            }
            RootCause::AmbiguityInCode | RootCause::ComplexControlFlow => "Code Complexity",
            RootCause::ModelConstraint(_) => "Model-specific Constraints",
        }
    }

    /// What the model should avoid, phrased for feedback prompts.
    pub fn pitfall(&self) -> &'static str {
        use ModelConstraintKind::*;
        match self {
            RootCause::LogicConditional => {
                "every branch of an if, else if, else or switch that can change the criterion variable must be kept, together with its condition"
            }
            RootCause::LogicLoop => "statements inside loops that carry values across iterations must be kept, together with the loop header",
            RootCause::LogicMethodInvocation => {
                "follow values into called methods and back through their return statements and arguments"
            }
            RootCause::AmbiguityInCode => "expressions spanning several lines or initialized in several places must be traced completely",
            RootCause::ComplexControlFlow => {
                "in nested loops and conditionals track how each variable depends on the enclosing loop variables across all iterations"
            }
            RootCause::ModelConstraint(ContextWindow) => "the answer was cut short; list every relevant line even for long programs",
            RootCause::ModelConstraint(IntermixedText) => "comments and string literals are not code and never belong to the slice",
            RootCause::ModelConstraint(JsonParsing) => "the answer must be a single well-formed JSON object in the required format",
        }
    }
}

impl fmt::Display for RootCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category {0:?}")]
pub struct UnknownCategory(pub String);

impl FromStr for RootCause {
    type Err = UnknownCategory;
    fn from_str(s: &str) -> Result<Self, UnknownCategory> {
        use ModelConstraintKind::*;
        Ok(match s {
            "B1" | "logic_conditional" => RootCause::LogicConditional,
            "B2" | "logic_loop" => RootCause::LogicLoop,
            "B3" | "logic_method_invocation" => RootCause::LogicMethodInvocation,
            "C1" | "ambiguity_in_code" => RootCause::AmbiguityInCode,
            "C2" | "complex_control_flow" => RootCause::ComplexControlFlow,
            "D1" | "model_constraint/context_window" => RootCause::ModelConstraint(ContextWindow),
            "D2" | "model_constraint/intermixed_text" => RootCause::ModelConstraint(IntermixedText),
            "D3" | "model_constraint/json_parsing" => RootCause::ModelConstraint(JsonParsing),
            other => return Err(UnknownCategory(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultLocation {
    ConditionalStatements,
    LoopConstructs,
    MethodInvocationsAndReturns,
    VariableDeclarationsAndAssignments,
    ClassDeclarations,
    Imports,
}

impl FaultLocation {
    pub const ALL: [FaultLocation; 6] = [
        FaultLocation::ConditionalStatements,
        FaultLocation::LoopConstructs,
        FaultLocation::MethodInvocationsAndReturns,
        FaultLocation::VariableDeclarationsAndAssignments,
        FaultLocation::ClassDeclarations,
        FaultLocation::Imports,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            FaultLocation::ConditionalStatements => "A1",
            FaultLocation::LoopConstructs => "A2",
            FaultLocation::MethodInvocationsAndReturns => "A3",
            FaultLocation::VariableDeclarationsAndAssignments => "A4",
            FaultLocation::ClassDeclarations => "A5",
            FaultLocation::Imports => "A6",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FaultLocation::ConditionalStatements => "Conditional Statements",
            FaultLocation::LoopConstructs => "Loop Constructs",
            FaultLocation::MethodInvocationsAndReturns => "Method Invocations and Returns",
            FaultLocation::VariableDeclarationsAndAssignments => "Variable Declarations and Assignments",
            FaultLocation::ClassDeclarations => "Class Declarations",
            FaultLocation::Imports => "Imports",
        }
    }
}

impl fmt::Display for FaultLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FaultLocation {
    type Err = UnknownCategory;
    fn from_str(s: &str) -> Result<Self, UnknownCategory> {
        FaultLocation::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.code())
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
string_serde!(RootCause);
string_serde!(FaultLocation);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureLabel {
    pub task_id: String,
    pub root_cause: RootCause,
    pub locations: BTreeSet<FaultLocation>,
    pub reviewer: String,
    /// RFC 3339, supplied by the caller.
    pub timestamp: String,
    #[serde(default)]
    pub notes: String,
}

/// Consensus record closing a disagreement between reviewers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub task_id: String,
    pub root_cause: RootCause,
    pub locations: BTreeSet<FaultLocation>,
    pub resolver: String,
    pub timestamp: String,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LabelRecord {
    Label {
        version: u32,
        #[serde(flatten)]
        label: FailureLabel,
    },
    Resolution(Resolution),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("task {0} matched the ground truth exactly")]
    NotAFailure(String),
    #[error("a label needs at least one location")]
    EmptyLocations,
    #[error("reviewers disagree on tasks {0:?}")]
    UnresolvedDisagreement(Vec<String>),
    #[error("label store line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Failed tasks in input order: those whose Accuracy-D is below 1.
pub fn select_failures(scores: &[TaskScore]) -> Vec<String> {
    scores.iter().filter(|s| s.acc_d < 1.0).map(|s| s.task_id.clone()).collect()
}

/// The agreed classification of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveLabel {
    pub task_id: String,
    pub root_cause: RootCause,
    pub locations: BTreeSet<FaultLocation>,
}

/// Append-only label history.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelStore {
    records: Vec<LabelRecord>,
}

impl LabelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[LabelRecord] {
        &self.records
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TaxonomyError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(line).map_err(|e| TaxonomyError::Corrupt { line: i + 1, message: e.to_string() })?;
            records.push(r);
        }
        Ok(LabelStore { records })
    }

    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
    }

    /// Appends a label version. `scores` maps task ids to their scores.
    pub fn record_label(
        &mut self,
        label: FailureLabel,
        scores: &BTreeMap<String, TaskScore>,
    ) -> Result<&LabelRecord, TaxonomyError> {
        let score = scores.get(&label.task_id).ok_or_else(|| TaxonomyError::UnknownTask(label.task_id.clone()))?;
        if score.exact_match {
            return Err(TaxonomyError::NotAFailure(label.task_id.clone()));
        }
        if label.locations.is_empty() {
            return Err(TaxonomyError::EmptyLocations);
        }
        let version = 1 + self
            .labels()
            .filter(|(_, l)| l.task_id == label.task_id && l.reviewer == label.reviewer)
            .count() as u32;
        self.records.push(LabelRecord::Label { version, label });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn record_resolution(&mut self, resolution: Resolution) -> Result<&LabelRecord, TaxonomyError> {
        if resolution.locations.is_empty() {
            return Err(TaxonomyError::EmptyLocations);
        }
        if !self.labels().any(|(_, l)| l.task_id == resolution.task_id) {
            return Err(TaxonomyError::UnknownTask(resolution.task_id));
        }
        self.records.push(LabelRecord::Resolution(resolution));
        Ok(self.records.last().expect("just pushed"))
    }

    fn labels(&self) -> impl Iterator<Item = (u32, &FailureLabel)> {
        self.records.iter().filter_map(|r| match r {
            LabelRecord::Label { version, label } => Some((*version, label)),
            LabelRecord::Resolution(_) => None,
        })
    }

    /// Latest label of every reviewer, per task, with its record position.
    pub fn latest(&self) -> BTreeMap<&str, BTreeMap<&str, (usize, &FailureLabel)>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, (usize, &FailureLabel)>> = BTreeMap::new();
        for (pos, r) in self.records.iter().enumerate() {
            if let LabelRecord::Label { label, .. } = r {
                out.entry(&label.task_id).or_default().insert(&label.reviewer, (pos, label));
            }
        }
        out
    }

    fn latest_resolution(&self, task: &str) -> Option<(usize, &Resolution)> {
        self.records.iter().enumerate().rev().find_map(|(pos, r)| match r {
            LabelRecord::Resolution(res) if res.task_id == task => Some((pos, res)),
            _ => None,
        })
    }

    /// Agreed classifications and the tasks still in disagreement. A
    /// resolution counts when it is newer than every reviewer's latest label.
    pub fn classify(&self) -> (Vec<EffectiveLabel>, Vec<String>) {
        let mut agreed = Vec::new();
        let mut open = Vec::new();
        for (task, by_reviewer) in self.latest() {
            let newest = by_reviewer.values().map(|(p, _)| *p).max().unwrap_or(0);
            if let Some((_, res)) = self.latest_resolution(task).filter(|(p, _)| *p > newest) {
                agreed.push(EffectiveLabel {
                    task_id: task.to_string(),
                    root_cause: res.root_cause,
                    locations: res.locations.clone(),
                });
                continue;
            }
            let mut views = by_reviewer.values().map(|(_, l)| (l.root_cause, &l.locations));
            let first = views.next().expect("task has a label");
            if views.all(|v| v == first) {
                agreed.push(EffectiveLabel { task_id: task.to_string(), root_cause: first.0, locations: first.1.clone() });
            } else {
                open.push(task.to_string());
            }
        }
        (agreed, open)
    }

    pub fn disagreements(&self) -> Vec<String> {
        self.classify().1
    }

    pub fn effective_labels(&self) -> Result<Vec<EffectiveLabel>, TaxonomyError> {
        let (agreed, open) = self.classify();
        if !open.is_empty() {
            return Err(TaxonomyError::UnresolvedDisagreement(open));
        }
        Ok(agreed)
    }

    pub fn effective_label(&self, task: &str) -> Option<EffectiveLabel> {
        self.classify().0.into_iter().find(|l| l.task_id == task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    /// Number of labelled failed tasks.
    pub total: usize,
    pub root_causes: BTreeMap<RootCause, usize>,
    pub locations: BTreeMap<FaultLocation, usize>,
}

impl Distribution {
    pub fn root_cause_percent(&self, rc: RootCause) -> f64 {
        percent(self.root_causes.get(&rc).copied().unwrap_or(0), self.total)
    }

    pub fn location_percent(&self, loc: FaultLocation) -> f64 {
        percent(self.locations.get(&loc).copied().unwrap_or(0), self.total)
    }
}

fn percent(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 * 100.0 / total as f64
    }
}

pub fn distribution(store: &LabelStore) -> Result<Distribution, TaxonomyError> {
    Ok(distribution_of(&store.effective_labels()?))
}

pub fn distribution_of(labels: &[EffectiveLabel]) -> Distribution {
    let mut root_causes = BTreeMap::new();
    let mut locations = BTreeMap::new();
    for l in labels {
        *root_causes.entry(l.root_cause).or_insert(0) += 1;
        for loc in &l.locations {
            *locations.entry(*loc).or_insert(0) += 1;
        }
    }
    Distribution { total: labels.len(), root_causes, locations }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowTriple {
    pub root_cause: RootCause,
    pub location: FaultLocation,
    pub count: usize,
}

pub fn flow_map(store: &LabelStore) -> Result<Vec<FlowTriple>, TaxonomyError> {
    Ok(flow_map_of(&store.effective_labels()?))
}

pub fn flow_map_of(labels: &[EffectiveLabel]) -> Vec<FlowTriple> {
    let mut counts: BTreeMap<(RootCause, FaultLocation), usize> = BTreeMap::new();
    for l in labels {
        for loc in &l.locations {
            *counts.entry((l.root_cause, *loc)).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .map(|((root_cause, location), count)| FlowTriple { root_cause, location, count })
        .collect()
}

/// `source,target,value` rows for Sankey renderers.
pub fn flow_csv(triples: &[FlowTriple]) -> String {
    let mut out = String::from("source,target,value\n");
    for t in triples {
        out.push_str(&format!("{} {},{} {},{}\n", t.root_cause.code(), t.root_cause.name(), t.location.code(), t.location.name(), t.count));
    }
    out
}

/// Checked-in reference set of 92 labelled failures used for report rendering.
pub const REFERENCE_LABELS: &str = include_str!("../../data/reference_labels.jsonl");

pub fn reference_store() -> LabelStore {
    LabelStore::from_jsonl(REFERENCE_LABELS).expect("reference labels parse")
}
