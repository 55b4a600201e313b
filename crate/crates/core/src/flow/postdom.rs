use super::cfg::{Cfg, EXIT};

/// Post-dominator sets over the augmented CFG (executable plus fall-through edges).
#[derive(Debug, Clone)]
pub struct PostDom {
    sets: Vec<Vec<bool>>,
    ipdom: Vec<Option<usize>>,
}

impl PostDom {
    pub fn compute(cfg: &Cfg) -> Self {
        let n = cfg.len();
        let succ: Vec<Vec<usize>> = (0..n).map(|i| cfg.aug_successors(i)).collect();
        let mut sets = vec![vec![true; n]; n];
        sets[EXIT] = vec![false; n];
        sets[EXIT][EXIT] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for v in (0..n).rev() {
                if v == EXIT {
                    continue;
                }
                let mut next = vec![true; n];
                if succ[v].is_empty() {
                    next = vec![false; n];
                }
                for s in &succ[v] {
                    for (k, bit) in next.iter_mut().enumerate() {
                        *bit &= sets[*s][k];
                    }
                }
                next[v] = true;
                if next != sets[v] {
                    sets[v] = next;
                    changed = true;
                }
            }
        }
        // the immediate post-dominator is the strict post-dominator post-dominated by all others
        let ipdom = (0..n)
            .map(|v| {
                let strict: Vec<usize> = (0..n).filter(|&d| d != v && sets[v][d]).collect();
                strict.iter().copied().find(|&d| strict.iter().all(|&o| sets[d][o]))
            })
            .collect();
        PostDom { sets, ipdom }
    }

    /// Whether `a` post-dominates `b` (reflexive).
    pub fn post_dominates(&self, a: usize, b: usize) -> bool {
        self.sets[b][a]
    }

    pub fn ipdom(&self, n: usize) -> Option<usize> {
        self.ipdom[n]
    }
}
