use std::collections::BTreeSet;

use super::cfg::Cfg;
use super::postdom::PostDom;

/// Control dependences as `(predicate, dependent)` node pairs.
///
/// For every augmented edge a→b where b does not strictly post-dominate a, every node
/// on the post-dominator tree path from b up to (excluding) ipdom(a) depends on a.
pub fn control_dependences(cfg: &Cfg, pdom: &PostDom) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for a in 0..cfg.len() {
        let stop = pdom.ipdom(a);
        for b in cfg.aug_successors(a) {
            if b != a && pdom.post_dominates(b, a) {
                continue;
            }
            let mut t = Some(b);
            while let Some(x) = t {
                if Some(x) == stop {
                    break;
                }
                out.insert((a, x));
                t = pdom.ipdom(x);
            }
        }
    }
    out
}
