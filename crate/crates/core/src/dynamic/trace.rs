use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lang::{Ast, StmtId};
use crate::slice::{Provenance, Slice, SlicingCriterion, StructuralLines};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    #[default]
    Statement,
    /// Pseudo-entry for a method activation; defines the parameters.
    MethodEntry,
}

impl EntryKind {
    fn is_statement(&self) -> bool {
        *self == EntryKind::Statement
    }
}

/// One executed statement instance. Predicates are recorded when their
/// condition has been evaluated, everything else when it completes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "EntryKind::is_statement")]
    pub kind: EntryKind,
    pub line: usize,
    pub stmt: StmtId,
    /// Values written, rendered Java-style.
    pub defs: BTreeMap<String, String>,
    /// Variable (or `@callee#k:what` call dependence) to the instance that produced it.
    pub uses: BTreeMap<String, u64>,
    pub control_parent: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
    /// Rendered value returned by `main`, if it returned one.
    pub result: Option<String>,
}

impl ExecutionTrace {
    pub fn get(&self, seq: u64) -> Option<&TraceEntry> {
        // seqs are dense and start at 0
        self.entries.get(seq as usize).filter(|e| e.seq == seq)
    }

    /// Executed statement instances, without method-entry pseudo-entries.
    pub fn statements(&self) -> impl DoubleEndedIterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::Statement)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("trace entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Last instance of a statement spanning `line`.
    pub fn last_instance_at(&self, ast: &Ast, line: usize) -> Option<&TraceEntry> {
        self.statements().rev().find(|e| {
            let st = ast.stmt(e.stmt);
            e.line == line || (st.line..=st.end_line).contains(&line) || st.slice_lines().contains(&line)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynEdgeKind {
    Data,
    Control,
}

/// Edges point from an instance to the earlier instance it depends on.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicDependenceGraph {
    pub edges: Vec<(u64, u64, DynEdgeKind)>,
}

impl DynamicDependenceGraph {
    pub fn from_trace(trace: &ExecutionTrace) -> Self {
        let mut edges = Vec::new();
        for e in &trace.entries {
            for d in e.uses.values() {
                edges.push((e.seq, *d, DynEdgeKind::Data));
            }
            if let Some(p) = e.control_parent {
                edges.push((e.seq, p, DynEdgeKind::Control));
            }
        }
        DynamicDependenceGraph { edges }
    }

    /// Every edge points strictly backward, which rules out cycles.
    pub fn is_acyclic(&self) -> bool {
        self.edges.iter().all(|(a, b, _)| b < a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicSliceError {
    #[error("no executed statement at line {0}")]
    CriterionNotExecuted(usize),
}

/// Instances backward-reachable from the last instance at `line`.
pub fn dynamic_slice_instances(
    ast: &Ast,
    trace: &ExecutionTrace,
    line: usize,
) -> Result<BTreeSet<u64>, DynamicSliceError> {
    let start = trace.last_instance_at(ast, line).ok_or(DynamicSliceError::CriterionNotExecuted(line))?;
    let mut seen = BTreeSet::from([start.seq]);
    let mut work = vec![start.seq];
    while let Some(s) = work.pop() {
        let Some(e) = trace.get(s) else { continue };
        for d in e.uses.values().copied().chain(e.control_parent) {
            if seen.insert(d) {
                work.push(d);
            }
        }
    }
    Ok(seen)
}

pub fn dynamic_backward_slice(
    ast: &Ast,
    trace: &ExecutionTrace,
    line: usize,
    structural: StructuralLines,
) -> Result<Slice, DynamicSliceError> {
    let instances = dynamic_slice_instances(ast, trace, line)?;
    let stmts: BTreeSet<StmtId> = instances.iter().filter_map(|s| trace.get(*s)).map(|e| e.stmt).collect();
    let mut lines = crate::slice::project_lines(ast, &stmts, structural);
    lines.insert(line);
    Ok(Slice { lines, criterion: SlicingCriterion::new_dynamic(line), provenance: Provenance::Oracle })
}
