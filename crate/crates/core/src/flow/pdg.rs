use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use super::cfg::{build_cfg, Cfg};
use super::control::control_dependences;
use super::postdom::PostDom;
use super::reaching::reaching_definitions;
use super::FlowError;
use crate::lang::{Ast, StmtId, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Data,
    Control,
    /// Call site to callee entry.
    Param,
    /// Callee entry, returns, and writes through reference parameters back to the call site.
    Call,
}

/// `to` depends on `from`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PdgEdge {
    pub from: StmtId,
    pub to: StmtId,
    pub kind: EdgeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Pdg {
    pub nodes: Vec<StmtId>,
    pub edges: Vec<PdgEdge>,
    #[serde(skip)]
    pub cfgs: Vec<Cfg>,
    #[serde(skip)]
    incoming: HashMap<StmtId, Vec<usize>>,
}

pub fn build_pdg(ast: &Ast) -> Result<Pdg, FlowError> {
    let mut edges: BTreeSet<PdgEdge> = BTreeSet::new();
    let mut cfgs = Vec::new();

    for m in &ast.methods {
        let cfg = build_cfg(ast, m.id)?;
        let pdom = PostDom::compute(&cfg);
        let stmt = |n: usize| cfg.nodes[n].stmt();
        for (p, d) in control_dependences(&cfg, &pdom) {
            if let (Some(from), Some(to)) = (stmt(p), stmt(d)) {
                edges.insert(PdgEdge { from, to, kind: EdgeKind::Control, var: None });
            }
        }
        for (d, u, v) in reaching_definitions(&cfg).data_edges(&cfg) {
            if let (Some(from), Some(to)) = (stmt(d), stmt(u)) {
                edges.insert(PdgEdge { from, to, kind: EdgeKind::Data, var: Some(v) });
            }
        }
        // field initializers feed the entry of every method that touches the field
        let params: BTreeSet<&str> = m.params.iter().map(|p| p.name.as_str()).collect();
        for f in &ast.class(m.class).fields {
            for v in &ast.stmt(*f).defs {
                if ast.stmt(m.decl).defs.contains(v) && !params.contains(v.as_str()) {
                    edges.insert(PdgEdge { from: *f, to: m.decl, kind: EdgeKind::Data, var: Some(v.clone()) });
                }
            }
        }
        cfgs.push(cfg);
    }

    for s in &ast.stmts {
        let Some(caller) = s.method() else { continue };
        let from_class = Some(ast.method(caller).class);
        for call in &s.calls {
            let Some(callee) = ast.resolve_call(call, from_class) else { continue };
            let cm = ast.method(callee);
            edges.insert(PdgEdge { from: s.id, to: cm.decl, kind: EdgeKind::Param, var: None });
            edges.insert(PdgEdge { from: cm.decl, to: s.id, kind: EdgeKind::Call, var: None });
            let entry_defs = &ast.stmt(cm.decl).defs;
            // parameters the callee can write through, plus fields it touches
            let visible: BTreeSet<&String> = entry_defs
                .iter()
                .filter(|v| cm.params.iter().find(|p| &&p.name == v).map_or(true, |p| p.ty.is_mutable_reference()))
                .collect();
            for t in ast.method_stmts(callee) {
                let st = ast.stmt(t);
                let is_return = matches!(st.kind, StmtKind::Return(_));
                if is_return || st.defs.iter().any(|v| visible.contains(v)) {
                    edges.insert(PdgEdge { from: t, to: s.id, kind: EdgeKind::Call, var: None });
                }
            }
        }
    }

    let nodes: Vec<StmtId> = ast
        .stmts
        .iter()
        .filter(|s| !matches!(s.kind, StmtKind::Block(_) | StmtKind::Empty))
        .map(|s| s.id)
        .collect();
    let edges: Vec<PdgEdge> = edges.into_iter().collect();
    let mut incoming: HashMap<StmtId, Vec<usize>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        incoming.entry(e.to).or_default().push(i);
    }
    Ok(Pdg { nodes, edges, cfgs, incoming })
}

impl Pdg {
    pub fn incoming(&self, s: StmtId) -> impl Iterator<Item = &PdgEdge> {
        self.incoming.get(&s).into_iter().flatten().map(|i| &self.edges[*i])
    }

    /// Static control-dependence predecessors of `s`.
    pub fn control_preds(&self, s: StmtId) -> Vec<StmtId> {
        self.incoming(s).filter(|e| e.kind == EdgeKind::Control).map(|e| e.from).collect()
    }

    pub fn has_edge(&self, from: StmtId, to: StmtId, kind: EdgeKind) -> bool {
        self.incoming(to).any(|e| e.from == from && e.kind == kind)
    }

    /// Graphviz rendering. Nodes are labelled `line: source text`.
    pub fn to_dot(&self, ast: &Ast) -> String {
        let mut out = String::from("digraph pdg {\n  node [shape=box, fontname=\"monospace\"];\n");
        for n in &self.nodes {
            let st = ast.stmt(*n);
            let text = ast.program.line(st.line).unwrap_or("").trim();
            let _ = writeln!(out, "  {} [label=\"{}: {}\"];", n, st.line, escape(text));
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Data => "solid",
                EdgeKind::Control => "dashed",
                EdgeKind::Param | EdgeKind::Call => "dotted",
            };
            let label = match &e.var {
                Some(v) => format!("{:?} {}", e.kind, v).to_lowercase(),
                None => format!("{:?}", e.kind).to_lowercase(),
            };
            let _ = writeln!(out, "  {} -> {} [label=\"{}\", style={}];", e.from, e.to, escape(&label), style);
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
