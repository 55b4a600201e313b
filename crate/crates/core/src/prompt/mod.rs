//! Prompt templates for the slicing tasks, the one-shot example, model
//! configuration, and parsing of model answers.

mod model;
mod response;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::SourceProgram;
use crate::slice::{render_output, SliceMode, SlicingCriterion};

pub use model::{estimate_tokens, ConfigError, ModelConfig};
pub use response::{parse_slice_response, LlmResponse, ParseFailure, ParseFailureKind, ParseOutcome, ParsedResponse};

pub const STATIC_TEMPLATE: &str = include_str!("../../templates/static.txt");
pub const DYNAMIC_TEMPLATE: &str = include_str!("../../templates/dynamic.txt");

/// Placeholders look like `⟦name⟧`.
pub const OPEN_DELIM: &str = "⟦";
pub const CLOSE_DELIM: &str = "⟧";

const EXAMPLE_SOURCE: &str = include_str!("../../templates/Example.java");
const EXAMPLE_STATIC_REASONING: &str = include_str!("../../templates/example_static_reasoning.txt");
const EXAMPLE_DYNAMIC_REASONING: &str = include_str!("../../templates/example_dynamic_reasoning.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    OneShot,
    OneShotCot,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::ZeroShot, Strategy::OneShot, Strategy::OneShotCot];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero_shot",
            Strategy::OneShot => "one_shot",
            Strategy::OneShotCot => "one_shot_cot",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero_shot" | "zero-shot" => Ok(Strategy::ZeroShot),
            "one_shot" | "one-shot" => Ok(Strategy::OneShot),
            "one_shot_cot" | "one-shot-cot" => Ok(Strategy::OneShotCot),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

impl std::str::FromStr for SliceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "static" => Ok(SliceMode::Static),
            "dynamic" => Ok(SliceMode::Dynamic),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// A worked example shown to the model before the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotExample {
    pub code: String,
    pub criterion: SlicingCriterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    pub output: BTreeSet<usize>,
}

impl ShotExample {
    /// The in-repo reference example (12 lines) for `mode`.
    pub fn reference(mode: SliceMode) -> Self {
        match mode {
            SliceMode::Static => ShotExample {
                code: EXAMPLE_SOURCE.to_string(),
                criterion: SlicingCriterion::new_static("sum", 10),
                reasoning: Some(EXAMPLE_STATIC_REASONING.trim_end().to_string()),
                output: BTreeSet::from([1, 2, 3, 4, 5, 6, 7, 9, 10]),
            },
            SliceMode::Dynamic => ShotExample {
                code: EXAMPLE_SOURCE.to_string(),
                criterion: SlicingCriterion::new_dynamic(10),
                reasoning: Some(EXAMPLE_DYNAMIC_REASONING.trim_end().to_string()),
                output: BTreeSet::from([1, 2, 3, 5, 6, 10]),
            },
        }
    }

    /// Example block as it appears in the prompt. Reasoning is only shown
    /// when `with_reasoning` is set.
    pub fn render(&self, with_reasoning: bool) -> String {
        let program = SourceProgram::new("example", self.code.clone());
        let mut out = String::from("Example:\n\nProgram:\n");
        out.push_str(&program.numbered());
        out.push_str("\nSlicing Criterion:\n");
        out.push_str(&self.criterion.to_string());
        out.push_str("\n\n");
        if with_reasoning {
            if let Some(r) = &self.reasoning {
                out.push_str("Reasoning:\n");
                out.push_str(r.trim_end());
                out.push_str("\n\n");
            }
        }
        out.push_str("Output:\n");
        out.push_str(&render_output(&self.output));
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub mode: SliceMode,
    pub strategy: Strategy,
    pub program: SourceProgram,
    pub criterion: SlicingCriterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ShotExample>,
}

impl PromptSpec {
    /// Spec using the reference example wherever the strategy needs one.
    pub fn standard(strategy: Strategy, program: SourceProgram, criterion: SlicingCriterion) -> Self {
        let mode = criterion.mode;
        let example = match strategy {
            Strategy::ZeroShot => None,
            Strategy::OneShot => Some(ShotExample { reasoning: None, ..ShotExample::reference(mode) }),
            Strategy::OneShotCot => Some(ShotExample::reference(mode)),
        };
        PromptSpec { mode, strategy, program, criterion, example }
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let bad = |msg: &str| Err(TemplateError::InvalidSpec(msg.to_string()));
        if self.criterion.mode != self.mode {
            return bad("criterion mode differs from prompt mode");
        }
        if self.mode == SliceMode::Static && self.criterion.variable.is_none() {
            return bad("static criterion needs a variable");
        }
        match (self.strategy, &self.example) {
            (Strategy::ZeroShot, Some(_)) => bad("zero-shot prompts carry no example"),
            (Strategy::OneShot | Strategy::OneShotCot, None) => bad("one-shot prompts need an example"),
            (Strategy::OneShotCot, Some(e)) if e.reasoning.as_deref().map_or(true, |r| r.trim().is_empty()) => {
                bad("chain-of-thought example needs reasoning text")
            }
            (_, Some(e)) if e.output.is_empty() => bad("example output is empty"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("{field} contains the template delimiter `{OPEN_DELIM}` or `{CLOSE_DELIM}`")]
    DelimiterInInput { field: &'static str },
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("template has unknown placeholder `{0}`")]
    UnknownPlaceholder(String),
}

pub fn template_for(mode: SliceMode) -> &'static str {
    match mode {
        SliceMode::Static => STATIC_TEMPLATE,
        SliceMode::Dynamic => DYNAMIC_TEMPLATE,
    }
}

pub fn build_prompt(spec: &PromptSpec) -> Result<String, TemplateError> {
    spec.validate()?;
    let block = spec.example.as_ref().map(|e| e.render(spec.strategy == Strategy::OneShotCot));
    build_prompt_with_block(spec, block.as_deref())
}

/// Fills the template of `spec.mode` with an arbitrary example block
/// (`None` drops the block and its line).
pub fn build_prompt_with_block(spec: &PromptSpec, example_block: Option<&str>) -> Result<String, TemplateError> {
    let program = spec.program.numbered();
    let criterion = spec.criterion.to_string();
    for (field, text) in [("program", program.as_str()), ("criterion", criterion.as_str()), ("example", example_block.unwrap_or(""))] {
        if text.contains(OPEN_DELIM) || text.contains(CLOSE_DELIM) {
            return Err(TemplateError::DelimiterInInput { field });
        }
    }
    fill(template_for(spec.mode), |name| match name {
        "program" => Ok(Some(program.clone())),
        "criterion" => Ok(Some(criterion.clone())),
        "example" => Ok(example_block.map(str::to_string)),
        other => Err(TemplateError::UnknownPlaceholder(other.to_string())),
    })
}

/// Single-pass substitution. A placeholder resolving to `None` is removed
/// together with the newline that follows it.
fn fill(
    template: &str,
    mut value: impl FnMut(&str) -> Result<Option<String>, TemplateError>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(start) = rest.find(OPEN_DELIM) {
        out.push_str(&rest[..start]);
        let after = &rest[start + OPEN_DELIM.len()..];
        let end = after.find(CLOSE_DELIM).ok_or_else(|| TemplateError::UnknownPlaceholder(after.to_string()))?;
        let name = &after[..end];
        rest = &after[end + CLOSE_DELIM.len()..];
        match value(name)? {
            Some(v) => out.push_str(&v),
            None => rest = rest.strip_prefix('\n').unwrap_or(rest),
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program() -> SourceProgram {
        SourceProgram::new("t", "class A {\n  static int main(String[] a) {\n    int free = 1;\n    return free;\n  }\n}\n")
    }

    #[test]
    fn zero_shot_static_has_no_example() {
        let spec = PromptSpec::standard(Strategy::ZeroShot, program(), SlicingCriterion::new_static("free", 5));
        let p = build_prompt(&spec).unwrap();
        assert!(p.starts_with("You are an AI assistant specialized in performing backward static slicing for Java programs."));
        assert!(!p.contains("Example:"));
        assert!(p.contains("Slicing Criterion:\nfree@5\n"));
        assert!(p.contains("{\"output\": [\"line_number1\", \"line_number2\"]}\n\nTask:"));
    }

    #[test]
    fn one_shot_omits_reasoning_and_cot_keeps_it() {
        let crit = SlicingCriterion::new_dynamic(4);
        let one = build_prompt(&PromptSpec::standard(Strategy::OneShot, program(), crit.clone())).unwrap();
        let cot = build_prompt(&PromptSpec::standard(Strategy::OneShotCot, program(), crit)).unwrap();
        assert!(one.contains("The Slicing Criterion line number corresponds to the return statement"));
        assert!(one.contains("Example:") && !one.contains("Reasoning:"));
        assert!(cot.contains("Reasoning:\n1. "));
    }

    #[test]
    fn invalid_specs() {
        let mut spec = PromptSpec::standard(Strategy::ZeroShot, program(), SlicingCriterion::new_static("free", 5));
        spec.example = Some(ShotExample::reference(SliceMode::Static));
        assert!(matches!(build_prompt(&spec), Err(TemplateError::InvalidSpec(_))));
        let mut spec = PromptSpec::standard(Strategy::OneShotCot, program(), SlicingCriterion::new_static("free", 5));
        spec.example.as_mut().unwrap().reasoning = None;
        assert!(matches!(build_prompt(&spec), Err(TemplateError::InvalidSpec(_))));
        let spec = PromptSpec::standard(Strategy::OneShot, program(), SlicingCriterion::new_dynamic(5));
        let spec = PromptSpec { mode: SliceMode::Static, ..spec };
        assert!(matches!(build_prompt(&spec), Err(TemplateError::InvalidSpec(_))));
    }

    #[test]
    fn delimiter_in_program_is_rejected() {
        let p = SourceProgram::new("t", "class A { String s = \"⟦example⟧\"; }\n");
        let spec = PromptSpec::standard(Strategy::ZeroShot, p, SlicingCriterion::new_static("s", 1));
        assert_eq!(build_prompt(&spec), Err(TemplateError::DelimiterInInput { field: "program" }));
    }

    #[test]
    fn placeholders_are_exactly_three() {
        for t in [STATIC_TEMPLATE, DYNAMIC_TEMPLATE] {
            assert_eq!(t.matches(OPEN_DELIM).count(), 3);
            assert!(t.lines().all(|l| l == l.trim_end()));
        }
    }
}
