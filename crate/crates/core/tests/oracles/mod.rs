//! Brute-force reference implementations of the flow analyses, shared by
//! the flow tests and the acceptance target.
#![allow(dead_code)]

use std::collections::BTreeSet;

use slicebench_core::flow::{Cfg, Pdg, EdgeKind, EXIT};
use slicebench_core::lang::{Ast, StmtId};

pub fn aug_succ(cfg: &Cfg) -> Vec<Vec<usize>> {
    (0..cfg.len())
        .map(|n| {
            let mut v: Vec<usize> = cfg.edges.iter().filter(|e| e.from == n).map(|e| e.to).collect();
            v.extend(cfg.aug_edges.iter().filter(|e| e.0 == n).map(|e| e.1));
            v
        })
        .collect()
}

/// `a` post-dominates `b` iff exit is unreachable from `b` once `a` is removed.
pub fn oracle_pdom(succ: &[Vec<usize>], a: usize, b: usize) -> bool {
    if a == b {
        return true;
    }
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![b];
    seen[b] = true;
    seen[a] = true;
    while let Some(n) = stack.pop() {
        if n == EXIT {
            return false;
        }
        for &s in &succ[n] {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    true
}

/// `y` is control dependent on `x` iff some successor s of x is post-dominated
/// by y while y does not strictly post-dominate x.
pub fn oracle_cd(succ: &[Vec<usize>]) -> BTreeSet<(usize, usize)> {
    let n = succ.len();
    let mut out = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            let strictly = y != x && oracle_pdom(succ, y, x);
            if !strictly && succ[x].iter().any(|&s| oracle_pdom(succ, y, s)) {
                out.insert((x, y));
            }
        }
    }
    out
}

/// (d, u, v) iff a def-clear path for v leads from d to u over executable edges.
pub fn oracle_data(cfg: &Cfg) -> BTreeSet<(usize, usize, String)> {
    let mut out = BTreeSet::new();
    for d in 0..cfg.len() {
        for v in &cfg.defs[d] {
            let mut seen = vec![false; cfg.len()];
            let mut stack = cfg.successors(d);
            while let Some(n) = stack.pop() {
                if seen[n] {
                    continue;
                }
                seen[n] = true;
                if cfg.uses[n].contains(v) {
                    out.insert((d, n, v.clone()));
                }
                if !cfg.defs[n].contains(v) {
                    stack.extend(cfg.successors(n));
                }
            }
        }
    }
    out
}

/// Post-dominance by enumerating simple paths from `b` to exit: `a`
/// post-dominates `b` iff every such path visits `a`.
pub fn oracle_pdom_paths(succ: &[Vec<usize>], a: usize, b: usize) -> bool {
    fn walk(succ: &[Vec<usize>], n: usize, a: usize, on_path: &mut Vec<bool>, hit: bool) -> bool {
        let hit = hit || n == a;
        if n == EXIT {
            return hit;
        }
        on_path[n] = true;
        let mut all = true;
        for &s in &succ[n] {
            if !on_path[s] && !walk(succ, s, a, on_path, hit) {
                all = false;
                break;
            }
        }
        on_path[n] = false;
        all
    }
    walk(succ, b, a, &mut vec![false; succ.len()], false)
}

/// Control dependence from path-enumerated post-dominance.
pub fn oracle_cd_paths(succ: &[Vec<usize>]) -> BTreeSet<(usize, usize)> {
    let n = succ.len();
    let mut out = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            let strictly = y != x && oracle_pdom_paths(succ, y, x);
            if !strictly && succ[x].iter().any(|&s| oracle_pdom_paths(succ, y, s)) {
                out.insert((x, y));
            }
        }
    }
    out
}

/// Oracle data edges of every method, lifted to statement ids.
pub fn oracle_pdg_data(pdg: &Pdg) -> BTreeSet<(StmtId, StmtId, String)> {
    let mut out = BTreeSet::new();
    for cfg in &pdg.cfgs {
        for (d, u, v) in oracle_data(cfg) {
            if let (Some(f), Some(t)) = (cfg.nodes[d].stmt(), cfg.nodes[u].stmt()) {
                out.insert((f, t, v));
            }
        }
    }
    out
}

/// PDG data edges between statements of the same method (field initializer
/// edges into method entries are left out).
pub fn pdg_intra_data(ast: &Ast, pdg: &Pdg) -> BTreeSet<(StmtId, StmtId, String)> {
    pdg.edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Data && ast.stmt(e.from).method().is_some())
        .map(|e| (e.from, e.to, e.var.clone().unwrap_or_default()))
        .collect()
}
