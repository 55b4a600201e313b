use std::collections::BTreeSet;

use super::cfg::{Cfg, ENTRY};

/// A definition site: variable name plus the CFG node that wrote it.
pub type Def = (String, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachingDefs {
    pub ins: Vec<BTreeSet<Def>>,
    pub outs: Vec<BTreeSet<Def>>,
}

impl ReachingDefs {
    /// Data dependences `(def node, use node, variable)`.
    pub fn data_edges(&self, cfg: &Cfg) -> BTreeSet<(usize, usize, String)> {
        let mut out = BTreeSet::new();
        for u in 0..cfg.len() {
            for (v, d) in &self.ins[u] {
                if cfg.uses[u].contains(v) {
                    out.insert((*d, u, v.clone()));
                }
            }
        }
        out
    }
}

fn transfer(cfg: &Cfg, n: usize, input: &BTreeSet<Def>) -> BTreeSet<Def> {
    let defs = &cfg.defs[n];
    let mut out: BTreeSet<Def> = input.iter().filter(|(v, _)| !defs.contains(v)).cloned().collect();
    out.extend(defs.iter().map(|v| (v.clone(), n)));
    out
}

/// One forward pass in `order`; returns whether anything changed.
pub fn iterate_once(cfg: &Cfg, rd: &mut ReachingDefs, order: &[usize]) -> bool {
    let mut changed = false;
    for &n in order {
        let mut input = BTreeSet::new();
        for p in cfg.predecessors(n) {
            input.extend(rd.outs[p].iter().cloned());
        }
        let out = if n == ENTRY { transfer(cfg, n, &BTreeSet::new()) } else { transfer(cfg, n, &input) };
        if input != rd.ins[n] || out != rd.outs[n] {
            rd.ins[n] = input;
            rd.outs[n] = out;
            changed = true;
        }
    }
    changed
}

pub fn reaching_definitions_in_order(cfg: &Cfg, order: &[usize]) -> ReachingDefs {
    let mut rd = ReachingDefs { ins: vec![BTreeSet::new(); cfg.len()], outs: vec![BTreeSet::new(); cfg.len()] };
    while iterate_once(cfg, &mut rd, order) {}
    rd
}

/// Strong-kill reaching definitions over executable edges. The entry node
/// defines the parameters and any fields the method touches.
pub fn reaching_definitions(cfg: &Cfg) -> ReachingDefs {
    reaching_definitions_in_order(cfg, &cfg.reverse_postorder())
}
