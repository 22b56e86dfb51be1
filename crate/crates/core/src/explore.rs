//! Bounded state spaces and the observables read off them.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::lang::Nfa;
use crate::model::{Configuration, Letter, MessageSet, Move, SemanticsKind, System};
use crate::par;
use crate::trace::{Action, Polarity, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Send(Letter),
    Receive(Letter),
    /// Rendezvous `!?a`, used only at bound 0.
    Sync(Letter),
    /// A receive hidden as an internal step.
    Silent,
}

impl Label {
    /// The send letter this edge contributes to a send word.
    pub fn sent(self) -> Option<Letter> {
        match self {
            Label::Send(l) | Label::Sync(l) => Some(l),
            _ => None,
        }
    }

    pub fn actions(self) -> Vec<Action> {
        match self {
            Label::Send(l) => vec![Action::send(l)],
            Label::Receive(l) => vec![Action::receive(l)],
            Label::Sync(l) => vec![Action::send(l), Action::receive(l)],
            Label::Silent => Vec::new(),
        }
    }

    pub fn render(self, ms: &MessageSet) -> String {
        match self {
            Label::Send(l) => format!("!{}", ms.name(l)),
            Label::Receive(l) => format!("?{}", ms.name(l)),
            Label::Sync(l) => format!("!?{}", ms.name(l)),
            Label::Silent => "tau".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("state space exceeds the ceiling of {limit} states")]
    TooManyStates { limit: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub max_states: usize,
    /// Expand each breadth-first level on the worker pool when available.
    pub parallel: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { max_states: 1_000_000, parallel: true }
    }
}

/// Reachable configurations under a buffer bound, with labelled edges.
///
/// State 0 is the initial configuration. States are numbered in
/// breadth-first discovery order, which is independent of worker scheduling.
#[derive(Clone, Debug)]
pub struct BoundedLts {
    sem: SemanticsKind,
    bound: usize,
    states: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
    edges: Vec<Vec<(Label, usize)>>,
}

fn successors(sys: &System, sem: SemanticsKind, k: usize, c: &Configuration) -> Vec<(Label, Configuration)> {
    let ms = sys.messages();
    let mut out = Vec::new();
    if k == 0 {
        for mv in sys.enabled_moves(sem, c) {
            if !mv.action.is_send() {
                continue;
            }
            let a = mv.action.letter;
            let sent = sys.apply(sem, c, &mv);
            let dst = ms.dst(a);
            for target in sys.peer(dst).successors(sent.control[dst], Action::receive(a)) {
                let recv = Move { peer: dst, action: Action::receive(a), target };
                out.push((Label::Sync(a), sys.apply(sem, &sent, &recv)));
            }
        }
        return out;
    }
    for mv in sys.enabled_moves(sem, c) {
        let a = mv.action.letter;
        let label = match mv.action.polarity {
            Polarity::Send => {
                if c.buffers[sem.slot(ms, a)].len() >= k {
                    continue;
                }
                Label::Send(a)
            }
            Polarity::Receive => Label::Receive(a),
        };
        out.push((label, sys.apply(sem, c, &mv)));
    }
    out
}

/// Explores every configuration reachable with all buffers holding at most
/// `k` letters. At `k = 0` every step is a rendezvous.
pub fn build_lts(
    sys: &System,
    sem: SemanticsKind,
    k: usize,
    opts: &ExploreOptions,
) -> Result<BoundedLts, ExploreError> {
    let init = sys.initial_configuration(sem);
    let mut lts = BoundedLts {
        sem,
        bound: k,
        states: vec![init.clone()],
        index: HashMap::from([(init, 0)]),
        edges: vec![Vec::new()],
    };
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let configs: Vec<&Configuration> = frontier.iter().map(|&i| &lts.states[i]).collect();
        let expanded = par::map(&configs, opts.parallel, |c| successors(sys, sem, k, c));
        let mut next = Vec::new();
        for (&src, succ) in frontier.iter().zip(expanded) {
            for (label, c) in succ {
                let id = match lts.index.get(&c) {
                    Some(&id) => id,
                    None => {
                        if lts.states.len() >= opts.max_states {
                            return Err(ExploreError::TooManyStates { limit: opts.max_states });
                        }
                        let id = lts.states.len();
                        lts.index.insert(c.clone(), id);
                        lts.states.push(c);
                        lts.edges.push(Vec::new());
                        next.push(id);
                        id
                    }
                };
                if !lts.edges[src].contains(&(label, id)) {
                    lts.edges[src].push((label, id));
                }
            }
        }
        frontier = next;
    }
    Ok(lts)
}

/// [`build_lts`] with receives relabelled as silent steps.
pub fn send_lts(sys: &System, sem: SemanticsKind, k: usize, opts: &ExploreOptions) -> Result<BoundedLts, ExploreError> {
    Ok(build_lts(sys, sem, k, opts)?.hide_receives())
}

/// The send-word language and the stable-pair languages of a bounded LTS.
#[derive(Clone, Debug)]
pub struct Observable {
    /// Prefix-closed send words of all bounded traces.
    pub send_language: Nfa,
    /// For each reachable stable configuration, the send words of traces ending there.
    pub stable_map: BTreeMap<Configuration, Nfa>,
}

pub fn observables(lts: &BoundedLts) -> Observable {
    let send_language = lts.send_nfa(|_| true);
    let stable_map = lts.stable_states().map(|i| (lts.states[i].clone(), lts.send_nfa(|q| q == i))).collect();
    Observable { send_language, stable_map }
}

/// Classification of states without outgoing edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SinkReport {
    /// Stable, and no peer has any transition left.
    pub terminal: Vec<usize>,
    /// No peer has any transition left, but letters remain buffered.
    pub orphan: Vec<usize>,
    /// Some peer still has transitions, yet none can fire even without the bound.
    pub deadlock: Vec<usize>,
    /// Blocked only because a send would overflow the bound.
    pub bound_limited: Vec<usize>,
}

/// States from which no receive-only path reaches a stable configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DrainReport {
    pub undrainable: Vec<usize>,
}

impl DrainReport {
    pub fn all_drainable(&self) -> bool {
        self.undrainable.is_empty()
    }
}

impl BoundedLts {
    pub fn semantics(&self) -> SemanticsKind {
        self.sem
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn state(&self, id: usize) -> &Configuration {
        &self.states[id]
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn id_of(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn edges(&self, id: usize) -> &[(Label, usize)] {
        &self.edges[id]
    }

    pub fn stable_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.states[i].is_stable())
    }

    pub fn hide_receives(mut self) -> BoundedLts {
        for out in &mut self.edges {
            for (label, _) in out.iter_mut() {
                if let Label::Receive(_) = label {
                    *label = Label::Silent;
                }
            }
            let mut seen = BTreeSet::new();
            out.retain(|e| seen.insert(*e));
        }
        self
    }

    /// Send-word automaton over the graph; `accept` selects accepting states.
    pub fn send_nfa(&self, accept: impl Fn(usize) -> bool) -> Nfa {
        let mut nfa = Nfa::new(accept(0));
        for i in 1..self.states.len() {
            nfa.add_state(accept(i));
        }
        for (i, out) in self.edges.iter().enumerate() {
            for &(label, j) in out {
                nfa.add_edge(i, label.sent().map(|l| l.0), j);
            }
        }
        nfa
    }

    /// Whether `trace` labels a path from the initial state.
    pub fn accepts_trace(&self, trace: &Trace) -> bool {
        let acts = trace.actions();
        // (state, position in trace)
        let mut cur: BTreeSet<usize> = BTreeSet::from([0]);
        let mut pos = 0;
        while pos < acts.len() {
            let mut next = BTreeSet::new();
            let mut width = 1;
            for &q in &cur {
                for &(label, t) in &self.edges[q] {
                    let la = label.actions();
                    if !la.is_empty() && acts[pos..].starts_with(&la) {
                        width = la.len();
                        next.insert(t);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            cur = next;
            pos += width;
        }
        true
    }

    /// Every trace labelling a path from the initial state with at most `depth` actions.
    pub fn traces_up_to(&self, depth: usize) -> BTreeSet<Trace> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(usize, Vec<Action>)> = vec![(0, Vec::new())];
        while let Some((q, word)) = stack.pop() {
            out.insert(Trace::from(word.clone()));
            for &(label, t) in &self.edges[q] {
                let la = label.actions();
                if word.len() + la.len() <= depth {
                    let mut w = word.clone();
                    w.extend(la);
                    stack.push((t, w));
                }
            }
        }
        out
    }

    /// Classifies every state without outgoing edges.
    pub fn sinks(&self, sys: &System) -> SinkReport {
        let mut report = SinkReport::default();
        for (i, c) in self.states.iter().enumerate() {
            if !self.edges[i].is_empty() {
                continue;
            }
            let exhausted = c.control.iter().enumerate().all(|(p, &q)| sys.peer(p).outgoing(q).is_empty());
            if exhausted {
                if c.is_stable() {
                    report.terminal.push(i);
                } else {
                    report.orphan.push(i);
                }
            } else if self.bound > 0 && !sys.enabled_moves(self.sem, c).is_empty() {
                report.bound_limited.push(i);
            } else {
                report.deadlock.push(i);
            }
        }
        report
    }

    /// Backward search over receive edges from the stable states.
    pub fn drainable_to_stable(&self) -> DrainReport {
        let n = self.states.len();
        let mut rev = vec![Vec::new(); n];
        for (i, out) in self.edges.iter().enumerate() {
            for &(label, j) in out {
                if matches!(label, Label::Receive(_) | Label::Silent) {
                    rev[j].push(i);
                }
            }
        }
        let mut ok: Vec<bool> = self.states.iter().map(Configuration::is_stable).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| ok[i]).collect();
        while let Some(q) = queue.pop_front() {
            for &p in &rev[q] {
                if !ok[p] {
                    ok[p] = true;
                    queue.push_back(p);
                }
            }
        }
        DrainReport { undrainable: (0..n).filter(|&i| !ok[i]).collect() }
    }

    /// Shortest trace from the initial state to `target`.
    pub fn path_to(&self, target: usize) -> Option<Trace> {
        let mut parent: Vec<Option<(usize, Label)>> = vec![None; self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(q) = queue.pop_front() {
            if q == target {
                let mut acts = Vec::new();
                let mut cur = q;
                while let Some((p, label)) = parent[cur] {
                    acts.splice(0..0, label.actions());
                    cur = p;
                }
                return Some(Trace::from(acts));
            }
            for &(label, t) in &self.edges[q] {
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some((q, label));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Graphviz rendering: nodes show control states and buffers, edges show actions.
    pub fn to_dot(&self, sys: &System) -> String {
        let ms = sys.messages();
        let mut s = String::from("digraph lts {\n  node [shape=box];\n");
        for (i, c) in self.states.iter().enumerate() {
            let label = c.display(sys, self.sem).to_string().replace('"', "\\\"");
            let style = if c.is_stable() { ", peripheries=2" } else { "" };
            let _ = writeln!(s, "  s{i} [label=\"{label}\"{style}];");
        }
        for (i, out) in self.edges.iter().enumerate() {
            for &(label, j) in out {
                let _ = writeln!(s, "  s{i} -> s{j} [label=\"{}\"];", label.render(ms));
            }
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::language_equal;
    use crate::reduce::builtins;

    fn word(ms: &MessageSet, s: &str) -> Vec<u32> {
        s.chars().map(|c| ms.letter(&c.to_string()).unwrap().0).collect()
    }

    #[test]
    fn example22_languages() {
        let sys = builtins::example22();
        let ms = sys.messages();
        let opts = ExploreOptions::default();
        let aabc = Nfa::prefix_closure(&[word(ms, "aabc")]);
        let aabcd = Nfa::prefix_closure(&[word(ms, "aabcd")]);
        for (k, expected) in [(0, &aabc), (1, &aabc), (2, &aabcd)] {
            let lts = build_lts(&sys, SemanticsKind::P2pFifo, k, &opts).unwrap();
            assert!(language_equal(&observables(&lts).send_language, expected), "k={k}");
        }
    }

    #[test]
    fn sync_lts_is_small_and_stable() {
        let sys = builtins::example22();
        let lts = build_lts(&sys, SemanticsKind::P2pFifo, 0, &ExploreOptions::default()).unwrap();
        let product: usize = sys.peers().iter().map(|p| p.state_count()).product();
        assert!(lts.state_count() <= product);
        assert!(lts.states().iter().all(Configuration::is_stable));
        assert_eq!(observables(&lts).stable_map.len(), 5);
        let hidden = lts.clone().hide_receives();
        assert!(hidden.edges.iter().flatten().all(|(l, _)| matches!(l, Label::Sync(_))));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let sys = builtins::example22();
        for k in 0..4 {
            let a =
                build_lts(&sys, SemanticsKind::P2pFifo, k, &ExploreOptions { parallel: true, ..Default::default() })
                    .unwrap();
            let b =
                build_lts(&sys, SemanticsKind::P2pFifo, k, &ExploreOptions { parallel: false, ..Default::default() })
                    .unwrap();
            assert_eq!(a.states, b.states);
            assert_eq!(a.edges, b.edges);
        }
    }

    #[test]
    fn ceiling_is_an_error() {
        let sys = builtins::example22();
        let opts = ExploreOptions { max_states: 3, parallel: false };
        assert_eq!(
            build_lts(&sys, SemanticsKind::P2pFifo, 2, &opts).unwrap_err(),
            ExploreError::TooManyStates { limit: 3 }
        );
    }

    #[test]
    fn silent_edges_match_receives() {
        let sys = builtins::example22();
        let opts = ExploreOptions::default();
        let lts = build_lts(&sys, SemanticsKind::P2pFifo, 1, &opts).unwrap();
        let recvs = lts.edges.iter().flatten().filter(|(l, _)| matches!(l, Label::Receive(_))).count();
        let hidden = send_lts(&sys, SemanticsKind::P2pFifo, 1, &opts).unwrap();
        let silent = hidden.edges.iter().flatten().filter(|(l, _)| *l == Label::Silent).count();
        assert_eq!(recvs, silent);
    }

    #[test]
    fn orphan_and_drain_for_lonely_sender() {
        let sys = builtins::send_idle();
        let lts = build_lts(&sys, SemanticsKind::P2pFifo, 1, &ExploreOptions::default()).unwrap();
        let sinks = lts.sinks(&sys);
        assert_eq!(sinks.orphan.len(), 1);
        assert!(sinks.deadlock.is_empty());
        assert_eq!(lts.drainable_to_stable().undrainable, sinks.orphan);
    }

    #[test]
    fn intro_sync_has_no_deadlock() {
        let sys = builtins::intro_sync();
        let lts = build_lts(&sys, SemanticsKind::P2pFifo, 1, &ExploreOptions::default()).unwrap();
        let sinks = lts.sinks(&sys);
        assert!(sinks.deadlock.is_empty() && sinks.orphan.is_empty());
        assert_eq!(sinks.terminal.len(), 1);
    }

    #[test]
    fn example22_drain_fails_after_d() {
        let sys = builtins::example22();
        let ms = sys.messages();
        let lts = build_lts(&sys, SemanticsKind::P2pFifo, 2, &ExploreOptions::default()).unwrap();
        let c = sys.run(SemanticsKind::P2pFifo, &Trace::parse(ms, "!a !a !?b !?c !d").unwrap()).unwrap();
        let id = lts.id_of(&c).unwrap();
        assert!(lts.drainable_to_stable().undrainable.contains(&id));
    }

    #[test]
    fn trace_membership_and_paths() {
        let sys = builtins::example22();
        let ms = sys.messages();
        let lts = build_lts(&sys, SemanticsKind::P2pFifo, 2, &ExploreOptions::default()).unwrap();
        let t = Trace::parse(ms, "!a !a !?b !?c !d").unwrap();
        assert!(lts.accepts_trace(&t));
        let c = sys.run(SemanticsKind::P2pFifo, &t).unwrap();
        let p = lts.path_to(lts.id_of(&c).unwrap()).unwrap();
        assert_eq!(sys.run(SemanticsKind::P2pFifo, &p).unwrap(), c);
        let sync = build_lts(&sys, SemanticsKind::P2pFifo, 0, &ExploreOptions::default()).unwrap();
        assert!(sync.accepts_trace(&Trace::parse(ms, "!?a !?a !?b !?c").unwrap()));
        assert!(!sync.accepts_trace(&Trace::parse(ms, "!a").unwrap()));
        assert!(lts.traces_up_to(4).iter().all(|t| t.len() <= 4 && t.is_k_bounded(ms, 2)));
        assert!(lts.to_dot(&sys).starts_with("digraph"));
    }
}
