//! Oracles written against the raw data structures, independent of the
//! algorithms they check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cfsm::lang::{Nfa, Symbol};
use cfsm::model::{Configuration, SemanticsKind, System};
use cfsm::{Action, Letter, MessageSet, Trace};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn closure(nfa: &Nfa, mut set: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut stack: Vec<usize> = set.iter().copied().collect();
    while let Some(q) = stack.pop() {
        for &(s, t) in nfa.edges(q) {
            if s.is_none() && set.insert(t) {
                stack.push(t);
            }
        }
    }
    set
}

/// Membership by direct simulation over the edge lists.
pub fn nfa_accepts(nfa: &Nfa, word: &[Symbol]) -> bool {
    let mut cur = closure(nfa, BTreeSet::from([nfa.initial()]));
    for &sym in word {
        let next =
            cur.iter().flat_map(|&q| nfa.edges(q).iter().filter(move |e| e.0 == Some(sym)).map(|e| e.1)).collect();
        cur = closure(nfa, next);
    }
    cur.iter().any(|&q| nfa.is_accepting(q))
}

/// Every word over `alphabet` with at most `max_len` symbols, shortest first.
pub fn all_words(alphabet: &[Symbol], max_len: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &a in alphabet {
                let mut w2: Vec<Symbol> = w.clone();
                w2.push(a);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The languages agree on all words up to `max_len`.
pub fn brute_equal(a: &Nfa, b: &Nfa, alphabet: &[Symbol], max_len: usize) -> bool {
    all_words(alphabet, max_len).iter().all(|w| nfa_accepts(a, w) == nfa_accepts(b, w))
}

pub fn random_nfa(rng: &mut StdRng, max_states: usize, alphabet: Symbol) -> Nfa {
    let n = rng.random_range(1..=max_states);
    let mut nfa = Nfa::new(rng.random_bool(0.6));
    for _ in 1..n {
        nfa.add_state(rng.random_bool(0.5));
    }
    let edges = rng.random_range(0..=2 * n + 1);
    for _ in 0..edges {
        let from = rng.random_range(0..n);
        let to = rng.random_range(0..n);
        let sym = if rng.random_bool(0.15) { None } else { Some(rng.random_range(0..alphabet)) };
        nfa.add_edge(from, sym, to);
    }
    nfa
}

/// A copy of `a` with one accepting flag flipped or one edge added.
pub fn mutate(rng: &mut StdRng, a: &Nfa, alphabet: Symbol) -> Nfa {
    let mut b = a.clone();
    let n = b.state_count();
    if rng.random_bool(0.5) {
        let q = rng.random_range(0..n);
        b.set_accepting(q, !b.is_accepting(q));
    } else {
        b.add_edge(rng.random_range(0..n), Some(rng.random_range(0..alphabet)), rng.random_range(0..n));
    }
    b
}

/// A pair of automata: independent, mutated, or an equivalent re-encoding.
pub fn random_pair(rng: &mut StdRng, max_states: usize, alphabet: Symbol) -> (Nfa, Nfa) {
    let a = random_nfa(rng, max_states, alphabet);
    let b = match rng.random_range(0..3) {
        0 => random_nfa(rng, max_states, alphabet),
        1 => mutate(rng, &a, alphabet),
        _ => a.determinize(),
    };
    (a, b)
}

/// A trace that mostly follows enabled actions of `sys` and sometimes
/// inserts an arbitrary action.
pub fn random_trace(rng: &mut StdRng, sys: &System, max_len: usize) -> Trace {
    let sem = SemanticsKind::P2pFifo;
    let ms = sys.messages();
    let letters: Vec<Letter> = ms.letters().collect();
    let len = rng.random_range(0..=max_len);
    let mut cur: Option<Configuration> = Some(sys.initial_configuration(sem));
    let mut out = Trace::new();
    for _ in 0..len {
        let enabled: Vec<Action> =
            cur.as_ref().map(|c| sys.enabled_actions(sem, c).into_iter().collect()).unwrap_or_default();
        let act = if !enabled.is_empty() && rng.random_bool(0.85) {
            enabled[rng.random_range(0..enabled.len())]
        } else if letters.is_empty() {
            break;
        } else {
            let l = letters[rng.random_range(0..letters.len())];
            if rng.random_bool(0.5) {
                Action::send(l)
            } else {
                Action::receive(l)
            }
        };
        cur = cur.and_then(|c| sys.step(sem, &c, act).ok()).map(|v| v[rng.random_range(0..v.len())].clone());
        out.push(act);
    }
    out
}

/// Whether `t` labels a path of peer `i` from its initial state.
pub fn peer_accepts(sys: &System, i: usize, t: &Trace) -> bool {
    let p = sys.peer(i);
    let mut cur = BTreeSet::from([p.initial()]);
    for &a in t {
        cur = cur.iter().flat_map(|&q| p.successors(q, a).collect::<Vec<_>>()).collect();
        if cur.is_empty() {
            return false;
        }
    }
    true
}

/// Largest number of letters in flight on any channel over all prefixes,
/// counting sends and receives per channel; `None` if some receive precedes its send.
pub fn max_in_flight(ms: &MessageSet, t: &Trace) -> Option<usize> {
    let n = ms.peer_count();
    let mut queues: Vec<Vec<Letter>> = vec![Vec::new(); n * n];
    let mut max = 0;
    for &a in t {
        let ch = ms.src(a.letter) * n + ms.dst(a.letter);
        if a.is_send() {
            queues[ch].push(a.letter);
            max = max.max(queues[ch].len());
        } else if queues[ch].first() == Some(&a.letter) {
            queues[ch].remove(0);
        } else {
            return None;
        }
    }
    Some(max)
}
