//! WebAssembly entry points for the browser demo. Each call takes the program
//! text and returns a JSON string; errors come back as a plain message.

use std::collections::BTreeSet;

use serde::Serialize;
use slicebench_core::dynamic::{dynamic_backward_slice, execute};
use slicebench_core::flow::pdg_from_source;
use slicebench_core::slice::{render_output, static_backward_slice, SlicingCriterion, StructuralLines};
use wasm_bindgen::prelude::*;

const PROGRAM_ID: &str = "Demo";

#[derive(Debug, Serialize)]
pub struct SliceView {
    pub lines: BTreeSet<usize>,
    /// The `{"output": [...]}` answer format.
    pub output: String,
    /// Dynamic only: what `main` returned.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    /// Dynamic only: executed statement instances.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct EdgeView {
    pub from_line: usize,
    pub to_line: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct GraphView {
    pub edges: Vec<EdgeView>,
    pub dot: String,
}

fn structural(include: bool) -> StructuralLines {
    if include {
        StructuralLines::Include
    } else {
        StructuralLines::Exclude
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("views serialize")
}

pub fn static_slice_json(source: &str, variable: &str, line: usize, include_structural: bool) -> Result<String, String> {
    let (ast, pdg) = pdg_from_source(source, PROGRAM_ID).map_err(|e| e.to_string())?;
    let c = SlicingCriterion::new_static(variable, line);
    let s = static_backward_slice(&ast, &pdg, &c, structural(include_structural)).map_err(|e| e.to_string())?;
    Ok(to_json(&SliceView { output: render_output(&s.lines), lines: s.lines, result: None, steps: None }))
}

pub fn dynamic_slice_json(source: &str, line: usize, include_structural: bool) -> Result<String, String> {
    let (ast, pdg) = pdg_from_source(source, PROGRAM_ID).map_err(|e| e.to_string())?;
    let trace = execute(&ast, &pdg).map_err(|e| e.to_string())?;
    let s = dynamic_backward_slice(&ast, &trace, line, structural(include_structural)).map_err(|e| e.to_string())?;
    Ok(to_json(&SliceView {
        output: render_output(&s.lines),
        lines: s.lines,
        result: trace.result.clone(),
        steps: Some(trace.entries.len()),
    }))
}

/// Dependence edges by source line, plus the Graphviz text.
pub fn dependences_json(source: &str) -> Result<String, String> {
    let (ast, pdg) = pdg_from_source(source, PROGRAM_ID).map_err(|e| e.to_string())?;
    let mut edges: Vec<EdgeView> = pdg
        .edges
        .iter()
        .map(|e| EdgeView {
            from_line: ast.stmt(e.from).line,
            to_line: ast.stmt(e.to).line,
            kind: serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
            var: e.var.clone(),
        })
        .collect();
    edges.sort_by(|a, b| (a.to_line, a.from_line, &a.kind).cmp(&(b.to_line, b.from_line, &b.kind)));
    edges.dedup_by(|a, b| a.from_line == b.from_line && a.to_line == b.to_line && a.kind == b.kind && a.var == b.var);
    Ok(to_json(&GraphView { edges, dot: pdg.to_dot(&ast) }))
}

#[wasm_bindgen(js_name = staticSlice)]
pub fn static_slice(source: &str, variable: &str, line: usize, include_structural: bool) -> Result<String, JsError> {
    static_slice_json(source, variable, line, include_structural).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dynamicSlice)]
pub fn dynamic_slice(source: &str, line: usize, include_structural: bool) -> Result<String, JsError> {
    dynamic_slice_json(source, line, include_structural).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn dependences(source: &str) -> Result<String, JsError> {
    dependences_json(source).map_err(|e| JsError::new(&e))
}
