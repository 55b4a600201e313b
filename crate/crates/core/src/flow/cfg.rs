use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::FlowError;
use crate::lang::{Ast, MethodId, StmtId, StmtKind};

pub const ENTRY: usize = 0;
pub const EXIT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CfgNode {
    /// Bound to the method header statement, which carries the parameter pseudo-definitions.
    Entry(StmtId),
    Exit,
    Stmt(StmtId),
}

impl CfgNode {
    pub fn stmt(self) -> Option<StmtId> {
        match self {
            CfgNode::Entry(s) | CfgNode::Stmt(s) => Some(s),
            CfgNode::Exit => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLabel {
    Seq,
    TrueBranch,
    FalseBranch,
    BackEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CfgEdge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
}

/// Per-method control-flow graph over statements.
///
/// `edges` are the executable edges. `aug_edges` are non-executable edges used
/// only for post-dominance and control dependence: entry→exit, and from every
/// `break`/`continue`/`return` to its lexical successor, so that jumps act as
/// predicates and statements they skip depend on them.
#[derive(Debug, Clone, Serialize)]
pub struct Cfg {
    pub method: MethodId,
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<CfgEdge>,
    pub aug_edges: Vec<(usize, usize)>,
    pub defs: Vec<BTreeSet<String>>,
    pub uses: Vec<BTreeSet<String>>,
    #[serde(skip)]
    index: HashMap<StmtId, usize>,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_of(&self, s: StmtId) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn successors(&self, n: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.from == n).map(|e| e.to).collect()
    }

    pub fn predecessors(&self, n: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.to == n).map(|e| e.from).collect()
    }

    /// Successors including the non-executable edges, deduplicated and sorted.
    pub fn aug_successors(&self, n: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.from == n)
            .map(|e| e.to)
            .chain(self.aug_edges.iter().filter(|e| e.0 == n).map(|e| e.1))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Reverse post-order over executable edges from entry.
    pub fn reverse_postorder(&self) -> Vec<usize> {
        let succ: Vec<Vec<usize>> = (0..self.len()).map(|n| self.successors(n)).collect();
        let mut seen = vec![false; self.len()];
        let mut post = Vec::with_capacity(self.len());
        let mut stack = vec![(ENTRY, 0usize)];
        seen[ENTRY] = true;
        while let Some((n, i)) = stack.pop() {
            if i < succ[n].len() {
                stack.push((n, i + 1));
                let s = succ[n][i];
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(n);
            }
        }
        // unreachable nodes still need a slot in every dataflow ordering
        post.extend((0..self.len()).filter(|n| !seen[*n]));
        post.reverse();
        post
    }
}

#[derive(Clone, Copy)]
enum Pending {
    Edge(usize, EdgeLabel),
    Fallthrough(usize),
}

struct LoopCtx {
    continue_target: usize,
    continue_is_back: bool,
    breaks: Vec<Pending>,
}

struct Builder<'a> {
    ast: &'a Ast,
    cfg: Cfg,
    loops: Vec<LoopCtx>,
}

pub fn build_cfg(ast: &Ast, method: MethodId) -> Result<Cfg, FlowError> {
    let m = ast.method(method);
    let mut b = Builder {
        ast,
        cfg: Cfg {
            method,
            nodes: vec![CfgNode::Entry(m.decl), CfgNode::Exit],
            edges: Vec::new(),
            aug_edges: vec![(ENTRY, EXIT)],
            defs: vec![ast.stmt(m.decl).defs.clone(), BTreeSet::new()],
            uses: vec![BTreeSet::new(), BTreeSet::new()],
            index: HashMap::new(),
        },
        loops: Vec::new(),
    };
    b.cfg.index.insert(m.decl, ENTRY);
    let out = b.seq(&m.body, vec![Pending::Edge(ENTRY, EdgeLabel::Seq)])?;
    b.connect(&out, EXIT, EdgeLabel::Seq);
    let mut cfg = b.cfg;
    cfg.edges.sort();
    cfg.edges.dedup();
    cfg.aug_edges.sort();
    cfg.aug_edges.dedup();
    Ok(cfg)
}

impl Builder<'_> {
    fn node(&mut self, s: StmtId) -> usize {
        if let Some(n) = self.cfg.index.get(&s) {
            return *n;
        }
        let n = self.cfg.nodes.len();
        self.cfg.nodes.push(CfgNode::Stmt(s));
        let st = self.ast.stmt(s);
        self.cfg.defs.push(st.defs.clone());
        self.cfg.uses.push(st.uses.clone());
        self.cfg.index.insert(s, n);
        n
    }

    /// Wire pending exits into `to`. A pending `Seq` arriving at a loop guard
    /// from inside its body gets relabelled by the caller, not here.
    fn connect(&mut self, preds: &[Pending], to: usize, seq_label: EdgeLabel) {
        for p in preds {
            match *p {
                Pending::Edge(from, EdgeLabel::Seq) => self.cfg.edges.push(CfgEdge { from, to, label: seq_label }),
                Pending::Edge(from, label) => self.cfg.edges.push(CfgEdge { from, to, label }),
                Pending::Fallthrough(from) => self.cfg.aug_edges.push((from, to)),
            }
        }
    }

    fn seq(&mut self, stmts: &[StmtId], mut preds: Vec<Pending>) -> Result<Vec<Pending>, FlowError> {
        for s in stmts {
            preds = self.stmt(*s, preds)?;
        }
        Ok(preds)
    }

    fn stmt(&mut self, id: StmtId, preds: Vec<Pending>) -> Result<Vec<Pending>, FlowError> {
        let st = self.ast.stmt(id);
        match &st.kind {
            StmtKind::Block(b) => self.seq(b, preds),
            StmtKind::Empty => Ok(preds),
            StmtKind::LocalDecl(_) | StmtKind::Expr(_) => {
                let n = self.node(id);
                self.connect(&preds, n, EdgeLabel::Seq);
                Ok(vec![Pending::Edge(n, EdgeLabel::Seq)])
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                let n = self.node(id);
                self.connect(&preds, n, EdgeLabel::Seq);
                let mut out = self.stmt(*then_branch, vec![Pending::Edge(n, EdgeLabel::TrueBranch)])?;
                match else_branch {
                    Some(e) => out.extend(self.stmt(*e, vec![Pending::Edge(n, EdgeLabel::FalseBranch)])?),
                    None => out.push(Pending::Edge(n, EdgeLabel::FalseBranch)),
                }
                Ok(out)
            }
            StmtKind::While { body, .. } | StmtKind::ForEach { body, .. } => {
                let g = self.node(id);
                self.connect(&preds, g, EdgeLabel::Seq);
                self.loops.push(LoopCtx { continue_target: g, continue_is_back: true, breaks: Vec::new() });
                let body_out = self.stmt(*body, vec![Pending::Edge(g, EdgeLabel::TrueBranch)])?;
                self.back_to(&body_out, g);
                let ctx = self.loops.pop().expect("loop context");
                let mut out = ctx.breaks;
                out.push(Pending::Edge(g, EdgeLabel::FalseBranch));
                Ok(out)
            }
            StmtKind::For { init, update, body, .. } => {
                let preds = self.seq(init, preds)?;
                let g = self.node(id);
                self.connect(&preds, g, EdgeLabel::Seq);
                let update_nodes: Vec<usize> = update.iter().map(|u| self.node(*u)).collect();
                let (cont, cont_back) = match update_nodes.first() {
                    Some(u) => (*u, false),
                    None => (g, true),
                };
                self.loops.push(LoopCtx { continue_target: cont, continue_is_back: cont_back, breaks: Vec::new() });
                let body_out = self.stmt(*body, vec![Pending::Edge(g, EdgeLabel::TrueBranch)])?;
                let ctx = self.loops.pop().expect("loop context");
                if update_nodes.is_empty() {
                    self.back_to(&body_out, g);
                } else {
                    self.connect(&body_out, update_nodes[0], EdgeLabel::Seq);
                    for w in update_nodes.windows(2) {
                        self.cfg.edges.push(CfgEdge { from: w[0], to: w[1], label: EdgeLabel::Seq });
                    }
                    let last = *update_nodes.last().expect("non-empty");
                    self.cfg.edges.push(CfgEdge { from: last, to: g, label: EdgeLabel::BackEdge });
                }
                let mut out = ctx.breaks;
                out.push(Pending::Edge(g, EdgeLabel::FalseBranch));
                Ok(out)
            }
            StmtKind::DoWhile { body, .. } => {
                let g = self.node(id);
                self.loops.push(LoopCtx { continue_target: g, continue_is_back: false, breaks: Vec::new() });
                let head = self.cfg.edges.len();
                let body_out = self.stmt(*body, preds.clone())?;
                self.connect(&body_out, g, EdgeLabel::Seq);
                // the true edge re-enters the body at whatever node the preds were wired to
                let first = self.cfg.edges[head..]
                    .iter()
                    .find(|e| preds.iter().any(|p| matches!(p, Pending::Edge(f, _) if *f == e.from)))
                    .map(|e| e.to)
                    .unwrap_or(g);
                self.cfg.edges.push(CfgEdge { from: g, to: first, label: EdgeLabel::BackEdge });
                let ctx = self.loops.pop().expect("loop context");
                let mut out = ctx.breaks;
                out.push(Pending::Edge(g, EdgeLabel::FalseBranch));
                Ok(out)
            }
            StmtKind::Return(_) => {
                let n = self.node(id);
                self.connect(&preds, n, EdgeLabel::Seq);
                self.cfg.edges.push(CfgEdge { from: n, to: EXIT, label: EdgeLabel::Seq });
                Ok(vec![Pending::Fallthrough(n)])
            }
            StmtKind::Break => {
                let n = self.node(id);
                self.connect(&preds, n, EdgeLabel::Seq);
                let ctx = self
                    .loops
                    .last_mut()
                    .ok_or_else(|| FlowError::Internal(format!("`break` outside loop at line {}", st.line)))?;
                ctx.breaks.push(Pending::Edge(n, EdgeLabel::Seq));
                Ok(vec![Pending::Fallthrough(n)])
            }
            StmtKind::Continue => {
                let n = self.node(id);
                self.connect(&preds, n, EdgeLabel::Seq);
                let ctx = self
                    .loops
                    .last()
                    .ok_or_else(|| FlowError::Internal(format!("`continue` outside loop at line {}", st.line)))?;
                let label = if ctx.continue_is_back { EdgeLabel::BackEdge } else { EdgeLabel::Seq };
                let to = ctx.continue_target;
                self.cfg.edges.push(CfgEdge { from: n, to, label });
                Ok(vec![Pending::Fallthrough(n)])
            }
            StmtKind::Import(_) | StmtKind::ClassDecl(_) | StmtKind::MethodDecl(_) | StmtKind::Field(_) => Err(
                FlowError::Internal(format!("declaration statement at line {} inside a method body", st.line)),
            ),
        }
    }

    fn back_to(&mut self, preds: &[Pending], guard: usize) {
        for p in preds {
            match *p {
                Pending::Edge(from, EdgeLabel::Seq) => {
                    self.cfg.edges.push(CfgEdge { from, to: guard, label: EdgeLabel::BackEdge })
                }
                Pending::Edge(from, label) => self.cfg.edges.push(CfgEdge { from, to: guard, label }),
                Pending::Fallthrough(from) => self.cfg.aug_edges.push((from, guard)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_program, statement_at};

    fn cfg_of(src: &str, name: &str) -> (Ast, Cfg) {
        let ast = parse_program(src, "t").unwrap();
        let m = ast.find_method(name).unwrap().id;
        let cfg = build_cfg(&ast, m).unwrap();
        (ast, cfg)
    }

    fn edge(cfg: &Cfg, ast: &Ast, from_line: usize, to_line: usize) -> Vec<EdgeLabel> {
        let f = cfg.node_of(statement_at(ast, from_line).unwrap()).unwrap();
        let t = cfg.node_of(statement_at(ast, to_line).unwrap()).unwrap();
        cfg.edges.iter().filter(|e| e.from == f && e.to == t).map(|e| e.label).collect()
    }

    #[test]
    fn straight_line() {
        let src = "class A {\n static void f() {\n  int x = 1;\n  int y = 2;\n  int z = x + y;\n }\n}\n";
        let (ast, cfg) = cfg_of(src, "f");
        assert_eq!(cfg.len(), 5);
        let n = |l| cfg.node_of(statement_at(&ast, l).unwrap()).unwrap();
        let expected = vec![
            CfgEdge { from: ENTRY, to: n(3), label: EdgeLabel::Seq },
            CfgEdge { from: n(3), to: n(4), label: EdgeLabel::Seq },
            CfgEdge { from: n(4), to: n(5), label: EdgeLabel::Seq },
            CfgEdge { from: n(5), to: EXIT, label: EdgeLabel::Seq },
        ];
        let mut got = cfg.edges.clone();
        got.sort();
        let mut want = expected;
        want.sort();
        assert_eq!(got, want);
        assert_eq!(cfg.aug_edges, vec![(ENTRY, EXIT)]);
    }

    #[test]
    fn nested_loops_have_two_guards_and_back_edges() {
        let src = "class A {
  static void f(int m) {
    for (int z = m - 1; z >= 0; --z) {
      for (int i = 0; i <= z; ++i) {
        int y = z - i;
      }
    }
  }
}
";
        let (ast, cfg) = cfg_of(src, "f");
        let guard = |l| {
            let on = crate::lang::statements_on(&ast, l);
            let g = on.into_iter().find(|s| matches!(ast.stmt(*s).kind, StmtKind::For { .. })).unwrap();
            cfg.node_of(g).unwrap()
        };
        let (outer, inner) = (guard(3), guard(4));
        let backs: Vec<&CfgEdge> = cfg.edges.iter().filter(|e| e.label == EdgeLabel::BackEdge).collect();
        assert_eq!(backs.len(), 2);
        assert!(backs.iter().any(|e| e.to == outer));
        assert!(backs.iter().any(|e| e.to == inner));
        let y = cfg.node_of(statement_at(&ast, 5).unwrap()).unwrap();
        assert!(cfg.edges.contains(&CfgEdge { from: inner, to: y, label: EdgeLabel::TrueBranch }));
        // inner loop exit falls to the outer update, outer exit to method exit
        assert!(cfg.edges.iter().any(|e| e.from == inner && e.label == EdgeLabel::FalseBranch && e.to != outer));
        assert!(cfg.edges.contains(&CfgEdge { from: outer, to: EXIT, label: EdgeLabel::FalseBranch }));
    }

    #[test]
    fn if_without_else_false_edge_goes_to_join() {
        let src = "class A {\n static int f(int x) {\n  if (x > 0)\n   x = 1;\n  return x;\n }\n}\n";
        let (ast, cfg) = cfg_of(src, "f");
        assert_eq!(edge(&cfg, &ast, 3, 5), vec![EdgeLabel::FalseBranch]);
        assert_eq!(edge(&cfg, &ast, 3, 4), vec![EdgeLabel::TrueBranch]);
        assert_eq!(edge(&cfg, &ast, 4, 5), vec![EdgeLabel::Seq]);
    }

    #[test]
    fn jumps_get_fallthrough_edges() {
        let src = "class A {
 static int f(int n) {
  int s = 0;
  while (true) {
   if (s > n)
    break;
   s++;
  }
  return s;
 }
}
";
        let (ast, cfg) = cfg_of(src, "f");
        let n = |l| cfg.node_of(statement_at(&ast, l).unwrap()).unwrap();
        assert_eq!(edge(&cfg, &ast, 6, 9), vec![EdgeLabel::Seq]);
        assert!(cfg.aug_edges.contains(&(n(6), n(7))));
        assert!(cfg.aug_edges.contains(&(n(9), EXIT)));
        assert_eq!(edge(&cfg, &ast, 7, 4), vec![EdgeLabel::BackEdge]);
    }

    #[test]
    fn do_while_back_edge_reenters_body() {
        let src = "class A {\n static int f(int n) {\n  int s = 0;\n  do {\n   s += n;\n   n--;\n  } while (n > 0);\n  return s;\n }\n}\n";
        let (ast, cfg) = cfg_of(src, "f");
        let g = cfg.node_of(statement_at(&ast, 4).unwrap()).unwrap();
        let first = cfg.node_of(statement_at(&ast, 5).unwrap()).unwrap();
        assert!(cfg.edges.contains(&CfgEdge { from: g, to: first, label: EdgeLabel::BackEdge }));
        assert_eq!(edge(&cfg, &ast, 3, 5), vec![EdgeLabel::Seq]);
        assert_eq!(edge(&cfg, &ast, 6, 4), vec![EdgeLabel::Seq]);
    }

    #[test]
    fn every_node_lies_on_an_entry_exit_path() {
        let src = "class A {
 static int f(int[] a) {
  int best = 0;
  for (int x : a) {
   if (x < 0) continue;
   if (x > 100) return -1;
   best = Math.max(best, x);
  }
  do { best--; } while (best > 10);
  return best;
 }
}
";
        let (_, cfg) = cfg_of(src, "f");
        let reach = |start: usize, fwd: bool| {
            let mut seen = vec![false; cfg.len()];
            let mut st = vec![start];
            seen[start] = true;
            while let Some(n) = st.pop() {
                let next = if fwd { cfg.successors(n) } else { cfg.predecessors(n) };
                for s in next {
                    if !seen[s] {
                        seen[s] = true;
                        st.push(s);
                    }
                }
            }
            seen
        };
        let from_entry = reach(ENTRY, true);
        let to_exit = reach(EXIT, false);
        assert!((0..cfg.len()).all(|n| from_entry[n] && to_exit[n]));
    }
}
