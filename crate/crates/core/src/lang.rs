//! Finite automata over `u32` symbols with silent edges.
//!
//! Send languages use letter indices as symbols. Stable-configuration tags,
//! when needed, are encoded as extra symbols above the letter range.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

pub type Symbol = u32;

/// Nondeterministic automaton; `None` labels a silent edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    initial: usize,
    accepting: Vec<bool>,
    edges: Vec<Vec<(Option<Symbol>, usize)>>,
}

impl Nfa {
    /// An automaton with a single initial state.
    pub fn new(initial_accepting: bool) -> Self {
        Nfa { initial: 0, accepting: vec![initial_accepting], edges: vec![Vec::new()] }
    }

    /// The automaton of `↓words` (all prefixes), as a trie with every state accepting.
    pub fn prefix_closure(words: &[Vec<Symbol>]) -> Self {
        let mut nfa = Nfa::new(true);
        for w in words {
            let mut q = 0;
            for &s in w {
                q = match nfa.edges[q].iter().find(|(l, _)| *l == Some(s)) {
                    Some(&(_, t)) => t,
                    None => {
                        let t = nfa.add_state(true);
                        nfa.add_edge(q, Some(s), t);
                        t
                    }
                };
            }
        }
        nfa
    }

    pub fn add_state(&mut self, accepting: bool) -> usize {
        self.accepting.push(accepting);
        self.edges.push(Vec::new());
        self.accepting.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, symbol: Option<Symbol>, to: usize) {
        assert!(from < self.state_count() && to < self.state_count(), "edge references unknown state");
        if !self.edges[from].contains(&(symbol, to)) {
            self.edges[from].push((symbol, to));
        }
    }

    pub fn set_accepting(&mut self, state: usize, accepting: bool) {
        self.accepting[state] = accepting;
    }

    pub fn set_initial(&mut self, state: usize) {
        assert!(state < self.state_count());
        self.initial = state;
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn state_count(&self) -> usize {
        self.accepting.len()
    }

    pub fn edges(&self, state: usize) -> &[(Option<Symbol>, usize)] {
        &self.edges[state]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn alphabet(&self) -> BTreeSet<Symbol> {
        self.edges.iter().flatten().filter_map(|(s, _)| *s).collect()
    }

    /// No silent edges and at most one edge per symbol out of each state.
    pub fn is_deterministic(&self) -> bool {
        self.edges.iter().all(|out| {
            let mut seen = BTreeSet::new();
            out.iter().all(|(s, _)| matches!(s, Some(s) if seen.insert(*s)))
        })
    }

    fn close(&self, set: &mut BTreeSet<usize>) {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(q) = stack.pop() {
            for &(s, t) in &self.edges[q] {
                if s.is_none() && set.insert(t) {
                    stack.push(t);
                }
            }
        }
    }

    fn step_set(&self, set: &BTreeSet<usize>, symbol: Symbol) -> BTreeSet<usize> {
        let mut next: BTreeSet<usize> = set
            .iter()
            .flat_map(|&q| self.edges[q].iter())
            .filter(|(s, _)| *s == Some(symbol))
            .map(|&(_, t)| t)
            .collect();
        self.close(&mut next);
        next
    }

    pub fn accepts(&self, word: &[Symbol]) -> bool {
        let mut cur = BTreeSet::from([self.initial]);
        self.close(&mut cur);
        for &s in word {
            cur = self.step_set(&cur, s);
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|&q| self.accepting[q])
    }

    /// States reachable from the initial state by reading `word`.
    pub fn states_after(&self, word: &[Symbol]) -> BTreeSet<usize> {
        let mut cur = BTreeSet::from([self.initial]);
        self.close(&mut cur);
        for &s in word {
            cur = self.step_set(&cur, s);
        }
        cur
    }

    /// Accepted words of length at most `max_len`.
    pub fn words_up_to(&self, max_len: usize) -> BTreeSet<Vec<Symbol>> {
        let mut out = BTreeSet::new();
        let mut start = BTreeSet::from([self.initial]);
        self.close(&mut start);
        let mut layer: BTreeMap<Vec<Symbol>, BTreeSet<usize>> = BTreeMap::from([(Vec::new(), start)]);
        for len in 0..=max_len {
            let mut next = BTreeMap::new();
            for (w, set) in &layer {
                if set.iter().any(|&q| self.accepting[q]) {
                    out.insert(w.clone());
                }
                if len == max_len {
                    continue;
                }
                let symbols: BTreeSet<Symbol> =
                    set.iter().flat_map(|&q| self.edges[q].iter()).filter_map(|(s, _)| *s).collect();
                for s in symbols {
                    let t = self.step_set(set, s);
                    let mut w2 = w.clone();
                    w2.push(s);
                    next.insert(w2, t);
                }
            }
            layer = next;
        }
        out
    }

    /// Subset construction. The result is deterministic, silent-free and
    /// numbered in breadth-first order with symbols taken in ascending order.
    pub fn determinize(&self) -> Nfa {
        let mut start = BTreeSet::from([self.initial]);
        self.close(&mut start);
        let mut index: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        let mut subsets = vec![start.clone()];
        index.insert(start, 0);
        let mut out = Nfa { initial: 0, accepting: Vec::new(), edges: Vec::new() };
        let mut i = 0;
        while i < subsets.len() {
            let cur = subsets[i].clone();
            out.accepting.push(cur.iter().any(|&q| self.accepting[q]));
            out.edges.push(Vec::new());
            let mut moves: BTreeMap<Symbol, BTreeSet<usize>> = BTreeMap::new();
            for &q in &cur {
                for &(s, t) in &self.edges[q] {
                    if let Some(s) = s {
                        moves.entry(s).or_default().insert(t);
                    }
                }
            }
            for (s, mut target) in moves {
                self.close(&mut target);
                let next = *index.entry(target.clone()).or_insert_with(|| {
                    subsets.push(target);
                    subsets.len() - 1
                });
                out.edges[i].push((Some(s), next));
            }
            i += 1;
        }
        out
    }

    /// Minimal deterministic automaton for the same language.
    ///
    /// States that cannot reach acceptance are dropped, so the result is a
    /// partial DFA; the empty language gives one non-accepting state.
    pub fn minimize(&self) -> Nfa {
        let dfa = self.determinize().trim();
        let n = dfa.state_count();
        let symbols: Vec<Symbol> = dfa.alphabet().into_iter().collect();
        let table: Vec<BTreeMap<Symbol, usize>> =
            dfa.edges.iter().map(|out| out.iter().map(|&(s, t)| (s.unwrap(), t)).collect()).collect();
        let mut class: Vec<usize> = dfa.accepting.iter().map(|&a| usize::from(a)).collect();
        loop {
            let mut sigs: HashMap<(usize, Vec<Option<usize>>), usize> = HashMap::new();
            let mut next = vec![0; n];
            for q in 0..n {
                let row: Vec<Option<usize>> = symbols.iter().map(|s| table[q].get(s).map(|&t| class[t])).collect();
                let len = sigs.len();
                next[q] = *sigs.entry((class[q], row)).or_insert(len);
            }
            let stable = sigs.len() == class.iter().collect::<BTreeSet<_>>().len();
            class = next;
            if stable {
                break;
            }
        }
        let blocks = class.iter().max().map_or(0, |m| m + 1);
        let mut quotient =
            Nfa { initial: class[dfa.initial], accepting: vec![false; blocks], edges: vec![Vec::new(); blocks] };
        for q in 0..n {
            let b = class[q];
            quotient.accepting[b] |= dfa.accepting[q];
            for (&s, &t) in &table[q] {
                quotient.add_edge(b, Some(s), class[t]);
            }
        }
        quotient.determinize()
    }

    /// Removes states that are unreachable or cannot reach an accepting state.
    /// Keeps the initial state even when the language is empty.
    fn trim(&self) -> Nfa {
        let n = self.state_count();
        let mut reach = vec![false; n];
        let mut stack = vec![self.initial];
        reach[self.initial] = true;
        while let Some(q) = stack.pop() {
            for &(_, t) in &self.edges[q] {
                if !reach[t] {
                    reach[t] = true;
                    stack.push(t);
                }
            }
        }
        let mut rev = vec![Vec::new(); n];
        for q in 0..n {
            for &(_, t) in &self.edges[q] {
                rev[t].push(q);
            }
        }
        let mut live = self.accepting.clone();
        let mut stack: Vec<usize> = (0..n).filter(|&q| live[q]).collect();
        while let Some(q) = stack.pop() {
            for &p in &rev[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<bool> = (0..n).map(|q| q == self.initial || (reach[q] && live[q])).collect();
        let mut map = vec![usize::MAX; n];
        let mut out = Nfa { initial: 0, accepting: Vec::new(), edges: Vec::new() };
        for q in 0..n {
            if keep[q] {
                map[q] = out.add_state(self.accepting[q]);
            }
        }
        out.initial = map[self.initial];
        for q in 0..n {
            if !keep[q] {
                continue;
            }
            for &(s, t) in &self.edges[q] {
                if keep[t] && live[t] {
                    out.add_edge(map[q], s, map[t]);
                }
            }
        }
        out
    }

    /// Structural isomorphism of two deterministic automata reachable from their initial states.
    pub fn isomorphic_dfa(&self, other: &Nfa) -> bool {
        if self.state_count() != other.state_count() {
            return false;
        }
        let mut map: HashMap<usize, usize> = HashMap::from([(self.initial, other.initial)]);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            let p = map[&q];
            if self.accepting[q] != other.accepting[p] {
                return false;
            }
            let mine: BTreeMap<_, _> = self.edges[q].iter().copied().collect();
            let theirs: BTreeMap<_, _> = other.edges[p].iter().copied().collect();
            if mine.len() != self.edges[q].len() || theirs.len() != other.edges[p].len() {
                return false;
            }
            if mine.keys().ne(theirs.keys()) {
                return false;
            }
            for (s, t) in mine {
                let u = theirs[&s];
                match map.get(&t) {
                    Some(&m) if m != u => return false,
                    Some(_) => {}
                    None => {
                        map.insert(t, u);
                        queue.push_back(t);
                    }
                }
            }
        }
        let image: BTreeSet<_> = map.values().collect();
        image.len() == map.len()
    }
}

/// A shortest word in `L(a) \ L(b)`, least in symbol order among the shortest.
pub fn counterexample_word(a: &Nfa, b: &Nfa) -> Option<Vec<Symbol>> {
    let da = a.determinize();
    let db = b.determinize();
    let next = |dfa: &Nfa, q: usize, s: Symbol| dfa.edges[q].iter().find(|(l, _)| *l == Some(s)).map(|&(_, t)| t);
    // `None` on the right is the implicit rejecting sink of `b`.
    let start = (da.initial, Some(db.initial));
    type Pair = (usize, Option<usize>);
    let mut parent: HashMap<Pair, Option<(Pair, Symbol)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(node @ (qa, qb)) = queue.pop_front() {
        if da.accepting[qa] && !qb.is_some_and(|q| db.accepting[q]) {
            let mut word = Vec::new();
            let mut cur = node;
            while let Some((prev, s)) = parent[&cur] {
                word.push(s);
                cur = prev;
            }
            word.reverse();
            return Some(word);
        }
        for &(s, ta) in &da.edges[qa] {
            let s = s.expect("determinized");
            let tb = qb.and_then(|q| next(&db, q, s));
            let succ = (ta, tb);
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(succ) {
                e.insert(Some((node, s)));
                queue.push_back(succ);
            }
        }
    }
    None
}

pub fn language_subset(a: &Nfa, b: &Nfa) -> bool {
    counterexample_word(a, b).is_none()
}

pub fn language_equal(a: &Nfa, b: &Nfa) -> bool {
    language_subset(a, b) && language_subset(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Symbol = 0;
    const B: Symbol = 1;
    const C: Symbol = 2;
    const D: Symbol = 3;

    #[test]
    fn prefix_closed_chain() {
        let n = Nfa::prefix_closure(&[vec![A, A, B, C]]);
        let d = n.determinize();
        assert!(d.is_deterministic());
        assert_eq!(d.state_count(), 5);
        assert!(d.accepts(&[]) && d.accepts(&[A, A]) && d.accepts(&[A, A, B, C]));
        assert!(!d.accepts(&[A, B]));
        assert_eq!(n.minimize().state_count(), 5);
    }

    #[test]
    fn empty_language() {
        let mut n = Nfa::new(false);
        let q = n.add_state(false);
        n.add_edge(0, Some(A), q);
        let m = n.minimize();
        assert_eq!(m.state_count(), 1);
        assert!(!m.is_accepting(0));
        assert_eq!(m.edge_count(), 0);
        assert!(!n.determinize().accepts(&[A]));
    }

    #[test]
    fn inclusion_and_counterexample() {
        let l1 = Nfa::prefix_closure(&[vec![A, A, B, C]]);
        let l2 = Nfa::prefix_closure(&[vec![A, A, B, C, D]]);
        assert!(language_subset(&l1, &l2));
        assert!(!language_equal(&l1, &l2));
        assert_eq!(counterexample_word(&l2, &l1), Some(vec![A, A, B, C, D]));
        assert!(language_equal(&l1, &l1));
        assert_eq!(counterexample_word(&l1, &l2), None);
    }

    #[test]
    fn silent_edges_are_closed() {
        let mut n = Nfa::new(true);
        let q1 = n.add_state(true);
        let q2 = n.add_state(true);
        n.add_edge(0, None, q1);
        n.add_edge(q1, Some(A), q2);
        n.add_edge(q2, None, 0);
        assert!(n.accepts(&[A, A, A]));
        let d = n.determinize();
        assert!(d.is_deterministic());
        assert_eq!(d.minimize().state_count(), 1);
    }

    #[test]
    fn shortest_counterexample_prefers_low_symbols() {
        let mut a = Nfa::new(false);
        let x = a.add_state(true);
        a.add_edge(0, Some(B), x);
        a.add_edge(0, Some(A), x);
        let b = Nfa::new(false);
        assert_eq!(counterexample_word(&a, &b), Some(vec![A]));
    }

    #[test]
    fn determinize_idempotent_on_sample() {
        let mut n = Nfa::new(false);
        for _ in 0..3 {
            n.add_state(false);
        }
        n.add_edge(0, Some(A), 1);
        n.add_edge(0, Some(A), 2);
        n.add_edge(1, Some(B), 3);
        n.add_edge(2, None, 3);
        n.set_accepting(3, true);
        let d = n.determinize();
        assert!(d.isomorphic_dfa(&d.determinize()));
    }
}
