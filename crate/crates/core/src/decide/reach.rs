use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::decide::{ring_synchronizable, DecideError};
use crate::explore::{build_lts, ExploreOptions};
use crate::lang::Nfa;
use crate::model::{Configuration, Letter, SemanticsKind, System};
use crate::trace::{Action, Polarity, Trace};

/// Reachable configurations of a 1-synchronizable ring system: a stable
/// rendezvous-reachable base configuration, then sends only.
#[derive(Clone, Debug)]
pub struct RegularReachSet {
    pub base: Vec<Configuration>,
    /// `send_paths[b][i]`: send-only transitions of peer `i` from its state in
    /// base `b`. Automaton states are the peer's states.
    pub send_paths: Vec<Vec<Nfa>>,
    peers: usize,
    slots: Vec<usize>,
}

fn send_path_nfa(sys: &System, peer: usize, from: usize) -> Nfa {
    let p = sys.peer(peer);
    let mut nfa = Nfa::new(true);
    for _ in 1..p.state_count() {
        nfa.add_state(true);
    }
    nfa.set_initial(from);
    for t in p.transitions() {
        if t.action.is_send() {
            nfa.add_edge(t.from.index(), Some(t.action.letter.0), t.to.index());
        }
    }
    nfa
}

pub fn reach_representation(sys: &System, opts: &ExploreOptions) -> Result<RegularReachSet, DecideError> {
    if !ring_synchronizable(sys, opts)?.equal {
        return Err(DecideError::NotSynchronizable);
    }
    let sem = SemanticsKind::P2pFifo;
    let sync = build_lts(sys, sem, 0, opts)?;
    let base: Vec<Configuration> = sync.stable_states().map(|i| sync.state(i).clone()).collect();
    let send_paths = base
        .iter()
        .map(|c| (0..sys.peer_count()).map(|i| send_path_nfa(sys, i, c.control[i].index())).collect())
        .collect();
    let np = sys.peer_count();
    let ms = sys.messages();
    // Outgoing ring channel slot of each peer.
    let slots = (0..np)
        .map(|i| ms.letters().find(|&l| ms.src(l) == i).map(|l| sem.slot(ms, l)).unwrap_or(usize::MAX))
        .collect();
    Ok(RegularReachSet { base, send_paths, peers: np, slots })
}

/// Whether some base configuration lets every peer spell its outgoing channel
/// content by sends alone and end in its current state.
pub fn reach_contains(rep: &RegularReachSet, c: &Configuration) -> bool {
    if c.control.len() != rep.peers {
        return false;
    }
    let owned: BTreeSet<usize> = rep.slots.iter().copied().filter(|&s| s != usize::MAX).collect();
    if c.buffers.iter().enumerate().any(|(s, w)| !w.is_empty() && !owned.contains(&s)) {
        return false;
    }
    rep.send_paths.iter().any(|paths| {
        (0..rep.peers).all(|i| {
            let word: Vec<u32> = match rep.slots[i] {
                usize::MAX => Vec::new(),
                s => c.buffers[s].iter().map(|l: &Letter| l.0).collect(),
            };
            paths[i].states_after(&word).contains(&c.control[i].index())
        })
    })
}

/// A shortest receive-only sequence from `c` to a stable configuration.
pub fn receive_drain(sys: &System, sem: SemanticsKind, c: &Configuration) -> Option<Trace> {
    let mut parent: HashMap<Configuration, Option<(Configuration, Action)>> = HashMap::from([(c.clone(), None)]);
    let mut queue = VecDeque::from([c.clone()]);
    while let Some(cur) = queue.pop_front() {
        if cur.is_stable() {
            let mut acts = Vec::new();
            let mut node = cur;
            while let Some(Some((prev, a))) = parent.get(&node).cloned() {
                acts.push(a);
                node = prev;
            }
            acts.reverse();
            return Some(Trace::from(acts));
        }
        for mv in sys.enabled_moves(sem, &cur) {
            if mv.action.polarity != Polarity::Receive {
                continue;
            }
            let next = sys.apply(sem, &cur, &mv);
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((cur.clone(), mv.action)));
                queue.push_back(next);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::builtins;

    #[test]
    fn ring2_representation() {
        let sys = builtins::ring2_sync();
        let ms = sys.messages();
        let rep = reach_representation(&sys, &ExploreOptions::default()).unwrap();
        // initial, after !?a, after !?a !?b
        assert_eq!(rep.base.len(), 3);
        let sem = SemanticsKind::P2pFifo;
        let after_a = sys.run(sem, &Trace::parse(ms, "!a").unwrap()).unwrap();
        assert!(reach_contains(&rep, &after_a));
        assert!(reach_contains(&rep, &sys.initial_configuration(sem)));
        let mut bogus = after_a.clone();
        bogus.buffers[sem.slot(ms, ms.letter("a").unwrap())].push(ms.letter("a").unwrap());
        assert!(!reach_contains(&rep, &bogus));
    }

    #[test]
    fn drain() {
        let sys = builtins::ring2_sync();
        let ms = sys.messages();
        let sem = SemanticsKind::P2pFifo;
        let c0 = sys.initial_configuration(sem);
        assert_eq!(receive_drain(&sys, sem, &c0), Some(Trace::new()));
        let c = sys.run(sem, &Trace::parse(ms, "!a").unwrap()).unwrap();
        assert_eq!(receive_drain(&sys, sem, &c).unwrap().display(ms).to_string(), "?a");
        let lone = builtins::send_idle();
        let c = lone.run(sem, &Trace::parse(lone.messages(), "!a").unwrap()).unwrap();
        assert_eq!(receive_drain(&lone, sem, &c), None);
    }
}
