//! Slicing criteria, slices, and the backward static slicer.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::flow::{EdgeKind, Pdg};
use crate::lang::{statements_on, Ast, NotFound, StmtId, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceMode {
    Static,
    Dynamic,
}

impl fmt::Display for SliceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SliceMode::Static => "static",
            SliceMode::Dynamic => "dynamic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlicingCriterion {
    pub mode: SliceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    pub line: usize,
}

impl SlicingCriterion {
    pub fn new_static(variable: impl Into<String>, line: usize) -> Self {
        Self { mode: SliceMode::Static, variable: Some(variable.into()), line }
    }

    pub fn new_dynamic(line: usize) -> Self {
        Self { mode: SliceMode::Dynamic, variable: None, line }
    }
}

/// `free@5` for static criteria, the bare line number for dynamic ones.
impl fmt::Display for SlicingCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variable {
            Some(v) if self.mode == SliceMode::Static => write!(f, "{v}@{}", self.line),
            _ => write!(f, "{}", self.line),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Oracle,
    Llm,
    HumanVerified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub lines: BTreeSet<usize>,
    pub criterion: SlicingCriterion,
    pub provenance: Provenance,
}

impl Slice {
    /// The `{"output": ["1", "3"]}` wire format models are asked to produce.
    pub fn to_output_json(&self) -> String {
        render_output(&self.lines)
    }
}

pub fn render_output(lines: &BTreeSet<usize>) -> String {
    let items: Vec<String> = lines.iter().map(|l| format!("\"{l}\"")).collect();
    format!("{{\"output\": [{}]}}", items.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuralLines {
    #[default]
    Include,
    Exclude,
}

impl std::str::FromStr for StructuralLines {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "include" => Ok(Self::Include),
            "exclude" => Ok(Self::Exclude),
            other => Err(format!("expected include or exclude, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CriterionError {
    #[error(transparent)]
    NotFound(#[from] NotFound),
    #[error("variable `{variable}` does not occur at line {line}")]
    VariableNotAtLine { variable: String, line: usize },
    #[error("static criterion needs a variable")]
    MissingVariable,
}

/// The statement a static criterion anchors on: the last one on `line` that
/// defines or uses `variable`.
pub fn resolve_criterion(ast: &Ast, variable: &str, line: usize) -> Result<StmtId, CriterionError> {
    let on = statements_on(ast, line);
    if on.is_empty() {
        return Err(NotFound(line).into());
    }
    on.into_iter()
        .rev()
        .find(|s| {
            let st = ast.stmt(*s);
            st.defs.contains(variable) || st.uses.contains(variable)
        })
        .ok_or_else(|| CriterionError::VariableNotAtLine { variable: variable.to_string(), line })
}

/// Statements in the backward static slice. When the criterion statement only
/// reads `variable`, its other operands are not followed: the seed is the
/// statement plus the definitions of `variable` reaching it and its controlling predicates.
pub fn static_slice_nodes(
    ast: &Ast,
    pdg: &Pdg,
    variable: &str,
    line: usize,
) -> Result<(StmtId, BTreeSet<StmtId>), CriterionError> {
    let seed = resolve_criterion(ast, variable, line)?;
    let mut in_slice = BTreeSet::from([seed]);
    let mut work = Vec::new();
    if ast.stmt(seed).defs.contains(variable) {
        work.push(seed);
    } else {
        for e in pdg.incoming(seed) {
            let relevant = match e.kind {
                EdgeKind::Control => true,
                EdgeKind::Data => e.var.as_deref() == Some(variable),
                EdgeKind::Param | EdgeKind::Call => false,
            };
            if relevant && in_slice.insert(e.from) {
                work.push(e.from);
            }
        }
    }
    while let Some(n) = work.pop() {
        for e in pdg.incoming(n) {
            if in_slice.insert(e.from) {
                work.push(e.from);
            }
        }
    }
    Ok((seed, in_slice))
}

/// Project statements to reported lines. Imports never appear; class headers
/// enclosing any sliced statement are added, and structural lines can be
/// dropped entirely.
pub fn project_lines(ast: &Ast, nodes: &BTreeSet<StmtId>, structural: StructuralLines) -> BTreeSet<usize> {
    let mut lines = BTreeSet::new();
    let mut classes = BTreeSet::new();
    for n in nodes {
        let st = ast.stmt(*n);
        if matches!(st.kind, StmtKind::Import(_)) {
            continue;
        }
        if let Some(c) = ast.class_of(*n) {
            classes.insert(c);
        }
        if structural == StructuralLines::Exclude && st.is_structural() {
            continue;
        }
        lines.extend(st.slice_lines());
    }
    if structural == StructuralLines::Include {
        lines.extend(classes.into_iter().map(|c| ast.stmt(ast.class(c).decl).line));
    }
    lines
}

pub fn static_backward_slice(
    ast: &Ast,
    pdg: &Pdg,
    criterion: &SlicingCriterion,
    structural: StructuralLines,
) -> Result<Slice, CriterionError> {
    let variable = criterion.variable.as_deref().ok_or(CriterionError::MissingVariable)?;
    let (_, nodes) = static_slice_nodes(ast, pdg, variable, criterion.line)?;
    let mut lines = project_lines(ast, &nodes, structural);
    lines.insert(criterion.line);
    Ok(Slice { lines, criterion: criterion.clone(), provenance: Provenance::Oracle })
}

/// Static counterpart of a dynamic slice at `line`: the full backward closure
/// of every statement on the line, so all variables it reads are covered.
pub fn static_slice_at_line(ast: &Ast, pdg: &Pdg, line: usize, structural: StructuralLines) -> Result<BTreeSet<usize>, CriterionError> {
    let on = statements_on(ast, line);
    if on.is_empty() {
        return Err(NotFound(line).into());
    }
    let mut nodes: BTreeSet<StmtId> = on.iter().copied().collect();
    let mut work = on;
    while let Some(n) = work.pop() {
        for e in pdg.incoming(n) {
            if nodes.insert(e.from) {
                work.push(e.from);
            }
        }
    }
    let mut lines = project_lines(ast, &nodes, structural);
    lines.insert(line);
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::pdg_from_source;

    fn slice(src: &str, var: &str, line: usize, s: StructuralLines) -> Result<Vec<usize>, CriterionError> {
        let (ast, pdg) = pdg_from_source(src, "t").unwrap();
        static_backward_slice(&ast, &pdg, &SlicingCriterion::new_static(var, line), s)
            .map(|sl| sl.lines.into_iter().collect())
    }

    const XYZ: &str = "class A {\n  static void f() {\n    int x = 1;\n    int y = 2;\n    int z = x + y;\n  }\n}\n";

    #[test]
    fn straight_line() {
        assert_eq!(slice(XYZ, "z", 5, StructuralLines::Exclude).unwrap(), vec![3, 4, 5]);
        assert_eq!(slice(XYZ, "y", 4, StructuralLines::Exclude).unwrap(), vec![4]);
        assert_eq!(slice(XYZ, "z", 5, StructuralLines::Include).unwrap(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn use_only_criterion_follows_just_that_variable() {
        assert_eq!(slice(XYZ, "x", 5, StructuralLines::Exclude).unwrap(), vec![3, 5]);
    }

    #[test]
    fn criterion_errors() {
        assert_eq!(
            slice(XYZ, "q", 5, StructuralLines::Include),
            Err(CriterionError::VariableNotAtLine { variable: "q".into(), line: 5 })
        );
        assert_eq!(slice(XYZ, "x", 6, StructuralLines::Include), Err(CriterionError::NotFound(NotFound(6))));
    }

    #[test]
    fn output_format() {
        let lines = BTreeSet::from([3, 1]);
        assert_eq!(render_output(&lines), r#"{"output": ["1", "3"]}"#);
        assert_eq!(render_output(&BTreeSet::new()), r#"{"output": []}"#);
        assert_eq!(SlicingCriterion::new_static("free", 5).to_string(), "free@5");
        assert_eq!(SlicingCriterion::new_dynamic(12).to_string(), "12");
    }
}
