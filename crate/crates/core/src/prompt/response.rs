use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::lang::SourceProgram;
use crate::slice::{Provenance, Slice, SlicingCriterion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParseFailureKind {
    MalformedJson,
    MissingOutputField,
    NonNumericLine,
    EmptyOutput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind:?}: {detail}")]
pub struct ParseFailure {
    pub kind: ParseFailureKind,
    pub detail: String,
}

impl ParseFailure {
    fn new(kind: ParseFailureKind, detail: impl Into<String>) -> Self {
        ParseFailure { kind, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub lines: BTreeSet<usize>,
    /// Lines outside the program that were dropped, and similar notes.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseOutcome {
    Slice { slice: Slice, warnings: Vec<String> },
    Failure(ParseFailure),
}

/// A model answer together with its interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw: String,
    pub parsed: ParseOutcome,
}

impl LlmResponse {
    pub fn interpret(raw: impl Into<String>, program: &SourceProgram, criterion: &SlicingCriterion) -> Self {
        let raw = raw.into();
        let parsed = match parse_slice_response(&raw, program) {
            Ok(p) => ParseOutcome::Slice {
                slice: Slice { lines: p.lines, criterion: criterion.clone(), provenance: Provenance::Llm },
                warnings: p.warnings,
            },
            Err(f) => ParseOutcome::Failure(f),
        };
        LlmResponse { raw, parsed }
    }

    pub fn slice(&self) -> Option<&Slice> {
        match &self.parsed {
            ParseOutcome::Slice { slice, .. } => Some(slice),
            ParseOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&ParseFailure> {
        match &self.parsed {
            ParseOutcome::Failure(f) => Some(f),
            ParseOutcome::Slice { .. } => None,
        }
    }
}

fn strip_fences(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    // drop the info string (```json)
    let body = rest.split_once('\n').map_or("", |(_, b)| b);
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

/// Interprets a model answer. Total: every input yields a value.
pub fn parse_slice_response(raw: &str, program: &SourceProgram) -> Result<ParsedResponse, ParseFailure> {
    let text = strip_fences(raw);
    let mut saw_object = false;
    let mut output = None;
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(mut map))) = stream.next() {
            saw_object = true;
            if let Some(v) = map.remove("output") {
                output = Some(v);
                break;
            }
        }
    }
    let output = match output {
        Some(v) => v,
        None if saw_object => {
            return Err(ParseFailure::new(ParseFailureKind::MissingOutputField, "no JSON object with an \"output\" field"))
        }
        None => return Err(ParseFailure::new(ParseFailureKind::MalformedJson, "no complete JSON object found")),
    };
    let Value::Array(items) = output else {
        return Err(ParseFailure::new(ParseFailureKind::MalformedJson, "\"output\" is not an array"));
    };
    if items.is_empty() {
        return Err(ParseFailure::new(ParseFailureKind::EmptyOutput, "\"output\" is empty"));
    }
    let max = program.line_count();
    let mut lines = BTreeSet::new();
    let mut warnings = Vec::new();
    for item in &items {
        let n = match item {
            Value::String(s) => s.trim().parse::<usize>().ok(),
            Value::Number(n) => n.as_u64().and_then(|n| usize::try_from(n).ok()),
            _ => None,
        };
        let Some(n) = n else {
            return Err(ParseFailure::new(ParseFailureKind::NonNumericLine, format!("not a line number: {item}")));
        };
        if n == 0 || n > max {
            warnings.push(format!("line {n} is outside the program (1..={max}), dropped"));
        } else {
            lines.insert(n);
        }
    }
    if lines.is_empty() {
        return Err(ParseFailure::new(ParseFailureKind::EmptyOutput, "no line inside the program"));
    }
    Ok(ParsedResponse { lines, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(n: usize) -> SourceProgram {
        SourceProgram::new("p", "x\n".repeat(n))
    }

    fn kind(raw: &str) -> ParseFailureKind {
        parse_slice_response(raw, &prog(10)).unwrap_err().kind
    }

    #[test]
    fn plain_and_fenced() {
        let p = prog(10);
        assert_eq!(parse_slice_response(r#"{"output": ["3","5"]}"#, &p).unwrap().lines, BTreeSet::from([3, 5]));
        assert_eq!(parse_slice_response("```json\n{\"output\":[\"1\"]}\n```", &p).unwrap().lines, BTreeSet::from([1]));
        let chatty = "Sure! Here it is:\n{\"output\": [\"5\", \"2\", \"5\", 7]}\nHope this helps.";
        assert_eq!(parse_slice_response(chatty, &p).unwrap().lines, BTreeSet::from([2, 5, 7]));
        // doubled braces as in some renderings of the output format
        assert_eq!(parse_slice_response(r#"{{"output": ["4"]}}"#, &p).unwrap().lines, BTreeSet::from([4]));
    }

    #[test]
    fn failures() {
        assert_eq!(kind(r#"{"result": []}"#), ParseFailureKind::MissingOutputField);
        assert_eq!(kind(r#"{"output": ["3", "5""#), ParseFailureKind::MalformedJson);
        assert_eq!(kind("lines 3 and 5"), ParseFailureKind::MalformedJson);
        assert_eq!(kind(r#"{"output": ["three"]}"#), ParseFailureKind::NonNumericLine);
        assert_eq!(kind(r#"{"output": [-1]}"#), ParseFailureKind::NonNumericLine);
        assert_eq!(kind(r#"{"output": []}"#), ParseFailureKind::EmptyOutput);
        assert_eq!(kind(r#"{"output": ["99"]}"#), ParseFailureKind::EmptyOutput);
    }

    #[test]
    fn out_of_range_dropped_with_warning() {
        let r = parse_slice_response(r#"{"output": ["2", "0", "11"]}"#, &prog(10)).unwrap();
        assert_eq!(r.lines, BTreeSet::from([2]));
        assert_eq!(r.warnings.len(), 2);
    }

    #[test]
    fn interpret_fills_exactly_one_side() {
        let c = SlicingCriterion::new_dynamic(3);
        let ok = LlmResponse::interpret(r#"{"output": ["3"]}"#, &prog(5), &c);
        assert!(ok.slice().is_some() && ok.failure().is_none());
        let bad = LlmResponse::interpret("nope", &prog(5), &c);
        assert!(bad.slice().is_none() && bad.failure().is_some());
    }
}
