use std::collections::{BTreeSet, HashMap};

use crate::decide::DecideError;
use crate::explore::{build_lts, send_lts, BoundedLts, ExploreOptions, Label};
use crate::model::{Letter, SemanticsKind, System};

type Signature = BTreeSet<(Option<Letter>, usize)>;

/// Visible letter of an edge; receives and silent steps are internal.
fn visible(label: Label) -> Option<Letter> {
    label.sent()
}

/// Branching bisimilarity of the initial states, by signature refinement on
/// the disjoint union. Not divergence sensitive.
pub fn branching_bisimilar(l1: &BoundedLts, l2: &BoundedLts) -> bool {
    let off = l1.state_count();
    let n = off + l2.state_count();
    let mut succ: Vec<Vec<(Option<Letter>, usize)>> = Vec::with_capacity(n);
    for (lts, shift) in [(l1, 0), (l2, off)] {
        for i in 0..lts.state_count() {
            let mut out: Vec<_> = lts.edges(i).iter().map(|&(l, t)| (visible(l), t + shift)).collect();
            out.sort();
            out.dedup();
            succ.push(out);
        }
    }
    let mut block = vec![0usize; n];
    let mut count = 1;
    loop {
        let mut sigs: HashMap<(usize, Signature), usize> = HashMap::new();
        let mut next = vec![0; n];
        for s in 0..n {
            let sig = signature(&succ, &block, s);
            let len = sigs.len();
            next[s] = *sigs.entry((block[s], sig)).or_insert(len);
        }
        let new_count = sigs.len();
        block = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    block[0] == block[off]
}

/// Observable moves of `s`: every edge leaving the inert silent closure of
/// `s` (silent paths within its block), except silent edges staying in the block.
fn signature(succ: &[Vec<(Option<Letter>, usize)>], block: &[usize], s: usize) -> Signature {
    let b = block[s];
    let mut sig = BTreeSet::new();
    let mut seen = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &(l, t) in &succ[u] {
            if l.is_none() && block[t] == b {
                if seen.insert(t) {
                    stack.push(t);
                }
            } else {
                sig.insert((l, block[t]));
            }
        }
    }
    sig
}

/// Send-observable state spaces at bounds `k` and `k + 1` are branching bisimilar.
pub fn k_stable(sys: &System, sem: SemanticsKind, k: usize, opts: &ExploreOptions) -> Result<bool, DecideError> {
    let a = send_lts(sys, sem, k, opts)?;
    let b = send_lts(sys, sem, k + 1, opts)?;
    Ok(branching_bisimilar(&a, &b))
}

/// Every trace is `k`-bounded: exploring at bound `k + 1` never fills a buffer past `k`.
pub fn strongly_k_stable(
    sys: &System,
    sem: SemanticsKind,
    k: usize,
    opts: &ExploreOptions,
) -> Result<bool, DecideError> {
    let lts = build_lts(sys, sem, k + 1, opts)?;
    Ok(lts.states().iter().all(|c| c.max_buffer_len() <= k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::builtins;

    fn slts(sys: &System, k: usize) -> BoundedLts {
        send_lts(sys, SemanticsKind::P2pFifo, k, &ExploreOptions::default()).unwrap()
    }

    #[test]
    fn example22_stability() {
        let sys = builtins::example22();
        let (l0, l1, l2) = (slts(&sys, 0), slts(&sys, 1), slts(&sys, 2));
        assert!(branching_bisimilar(&l0, &l1));
        assert!(!branching_bisimilar(&l1, &l2));
        assert!(branching_bisimilar(&l2, &l2));
    }

    #[test]
    fn strong_stability() {
        let opts = ExploreOptions::default();
        let sem = SemanticsKind::P2pFifo;
        assert!(strongly_k_stable(&builtins::send_idle(), sem, 1, &opts).unwrap());
        assert!(!strongly_k_stable(&builtins::send_twice(), sem, 1, &opts).unwrap());
        assert!(strongly_k_stable(&builtins::example22(), sem, 2, &opts).unwrap());
        assert!(!strongly_k_stable(&builtins::example22(), sem, 1, &opts).unwrap());
    }

    #[test]
    fn intro_sync_is_stable_at_zero() {
        let a = builtins::intro_sync();
        let l = slts(&a, 1);
        assert!(branching_bisimilar(&l, &slts(&a, 0)));
    }
}
