//! FIFO automata, the tiling encoding, and the three-peer systems built from them.
//!
//! Generated letters are named `a_12`, `a_13`, `a_31`, `a_32`, `a_23` for a
//! source letter `a`, the digits giving the channel.

pub mod builtins;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::lang::{Nfa, Symbol};
use crate::model::{validate_system, Letter, ModelError, RawPeer, RawSystem, System};
use crate::trace::{Action, Polarity, Trace};

/// Name of the row separator letter in the tiling encoding.
pub const CUT: &str = "cut";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("unknown tile `{0}`")]
    UnknownTile(String),
    #[error("tile name `{0}` is reserved")]
    ReservedTile(String),
    #[error("duplicate tile `{0}`")]
    DuplicateTile(String),
    #[error("padding tile `{blank}` is not compatible with `{tile}` in both directions")]
    Padding { blank: String, tile: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FifoAction {
    pub polarity: Polarity,
    pub letter: usize,
}

impl FifoAction {
    pub fn send(letter: usize) -> Self {
        FifoAction { polarity: Polarity::Send, letter }
    }

    pub fn receive(letter: usize) -> Self {
        FifoAction { polarity: Polarity::Receive, letter }
    }

    /// Symbol used for this action in automata over action words.
    pub fn symbol(self) -> Symbol {
        (2 * self.letter + usize::from(self.polarity == Polarity::Receive)) as Symbol
    }

    pub fn from_symbol(s: Symbol) -> Self {
        let s = s as usize;
        FifoAction { polarity: if s.is_multiple_of(2) { Polarity::Send } else { Polarity::Receive }, letter: s / 2 }
    }
}

/// A single machine writing to and reading from its own queue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FifoAutomaton {
    pub name: String,
    alphabet: Vec<String>,
    states: Vec<String>,
    initial: usize,
    transitions: Vec<(usize, FifoAction, usize)>,
}

/// A configuration of a FIFO automaton: control state and queue content.
pub type FifoConfig = (usize, Vec<usize>);

impl FifoAutomaton {
    pub fn new(name: &str, alphabet: &[&str], initial: &str) -> Self {
        FifoAutomaton {
            name: name.to_string(),
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            states: vec![initial.to_string()],
            initial: 0,
            transitions: Vec::new(),
        }
    }

    fn intern(&mut self, state: &str) -> usize {
        match self.states.iter().position(|s| s == state) {
            Some(i) => i,
            None => {
                self.states.push(state.to_string());
                self.states.len() - 1
            }
        }
    }

    pub fn add_state(&mut self, state: &str) -> usize {
        self.intern(state)
    }

    pub fn add(&mut self, from: &str, polarity: Polarity, letter: &str, to: &str) -> Result<(), ReduceError> {
        let letter = self.letter(letter).ok_or_else(|| ReduceError::UnknownLetter(letter.to_string()))?;
        let (from, to) = (self.intern(from), self.intern(to));
        let t = (from, FifoAction { polarity, letter }, to);
        if !self.transitions.contains(&t) {
            self.transitions.push(t);
        }
        Ok(())
    }

    pub fn send(&mut self, from: &str, letter: &str, to: &str) -> Result<(), ReduceError> {
        self.add(from, Polarity::Send, letter, to)
    }

    pub fn recv(&mut self, from: &str, letter: &str, to: &str) -> Result<(), ReduceError> {
        self.add(from, Polarity::Receive, letter, to)
    }

    /// A copy without the given transitions.
    pub fn without(&self, drop: &[(&str, Polarity, &str, &str)]) -> FifoAutomaton {
        let mut out = self.clone();
        out.transitions.retain(|&(f, a, t)| {
            !drop.iter().any(|&(df, dp, dl, dt)| {
                self.states[f] == df && a.polarity == dp && self.alphabet[a.letter] == dl && self.states[t] == dt
            })
        });
        out
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn letter(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|l| l == name)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transitions(&self) -> &[(usize, FifoAction, usize)] {
        &self.transitions
    }

    pub fn render_action(&self, a: FifoAction) -> String {
        format!("{}{}", a.polarity.sigil(), self.alphabet[a.letter])
    }

    pub fn render_trace(&self, t: &[FifoAction]) -> String {
        t.iter().map(|&a| self.render_action(a)).collect::<Vec<_>>().join(" ")
    }

    /// Successors of `c` under the queue semantics, with the queue bounded by `k` (`k >= 1`).
    pub fn successors(&self, c: &FifoConfig, k: usize) -> Vec<(FifoAction, FifoConfig)> {
        let (q, w) = c;
        let mut out = Vec::new();
        for &(from, a, to) in &self.transitions {
            if from != *q {
                continue;
            }
            match a.polarity {
                Polarity::Send if w.len() < k => {
                    let mut w2 = w.clone();
                    w2.push(a.letter);
                    out.push((a, (to, w2)));
                }
                Polarity::Receive if w.first() == Some(&a.letter) => {
                    out.push((a, (to, w[1..].to_vec())));
                }
                _ => {}
            }
        }
        out
    }

    /// Every `k`-bounded trace with at most `depth` actions, with each
    /// configuration it can reach.
    pub fn bounded_runs(&self, k: usize, depth: usize) -> BTreeMap<Vec<FifoAction>, BTreeSet<FifoConfig>> {
        let mut out: BTreeMap<Vec<FifoAction>, BTreeSet<FifoConfig>> = BTreeMap::new();
        let mut stack = vec![(Vec::new(), (self.initial, Vec::new()))];
        while let Some((trace, c)) = stack.pop() {
            if trace.len() < depth {
                for (a, next) in self.successors(&c, k) {
                    let mut t = trace.clone();
                    t.push(a);
                    stack.push((t, next));
                }
            }
            out.entry(trace).or_default().insert(c);
        }
        out
    }

    /// A shortest `k`-bounded trace ending with `?m`. The search is exact:
    /// there are finitely many configurations with a queue of at most `k` letters.
    pub fn trace_ending_in_receive(&self, m: usize, k: usize) -> Option<Vec<FifoAction>> {
        let start: FifoConfig = (self.initial, Vec::new());
        let mut parent: HashMap<FifoConfig, Option<(FifoConfig, FifoAction)>> = HashMap::from([(start.clone(), None)]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for (a, next) in self.successors(&c, k) {
                if a == FifoAction::receive(m) {
                    let mut out = vec![a];
                    let mut node = c;
                    while let Some(Some((prev, act))) = parent.get(&node).cloned() {
                        out.push(act);
                        node = prev;
                    }
                    out.reverse();
                    return Some(out);
                }
                if !parent.contains_key(&next) {
                    parent.insert(next.clone(), Some((c.clone(), a)));
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// The action language of the automaton read as a plain finite automaton
    /// (queue ignored), restricted so that `?m` occurs at most once and only last.
    pub fn lm_language(&self, m: usize) -> Nfa {
        let n = self.states.len();
        let mut nfa = Nfa::new(true);
        for _ in 1..n {
            nfa.add_state(true);
        }
        let done = nfa.add_state(true);
        nfa.set_initial(self.initial);
        for &(f, a, t) in &self.transitions {
            let target = if a == FifoAction::receive(m) { done } else { t };
            nfa.add_edge(f, Some(a.symbol()), target);
        }
        nfa
    }
}

/// Result of checking the two restrictions on a FIFO automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionReport {
    /// A receive transition leaving the initial state, if any.
    pub r2_violation: Option<String>,
    /// A nonempty trace reaching an empty queue, if one was found within the bounds.
    pub r1_violation: Option<Vec<FifoAction>>,
    pub bound: usize,
    pub depth: usize,
}

impl RestrictionReport {
    pub fn r2_holds(&self) -> bool {
        self.r2_violation.is_none()
    }

    /// Only meaningful up to the recorded bound and depth.
    pub fn r1_holds_up_to_bounds(&self) -> bool {
        self.r1_violation.is_none()
    }
}

/// Checks the no-initial-receive restriction exactly and the unstable-reachability
/// restriction over all traces of at most `depth` actions at queue bound `k`.
pub fn check_r1_r2(a: &FifoAutomaton, k: usize, depth: usize) -> RestrictionReport {
    let r2_violation = a
        .transitions
        .iter()
        .find(|(f, act, _)| *f == a.initial && act.polarity == Polarity::Receive)
        .map(|&(f, act, t)| format!("{} {} {}", a.states[f], a.render_action(act), a.states[t]));
    // Breadth-first so the reported violation is a shortest one.
    let mut layer = vec![(Vec::new(), (a.initial, Vec::new()))];
    let mut seen: BTreeSet<FifoConfig> = BTreeSet::new();
    let mut r1_violation = None;
    'outer: for _ in 0..depth {
        let mut next = Vec::new();
        for (trace, c) in &layer {
            for (act, c2) in a.successors(c, k.max(1)) {
                let mut t = trace.clone();
                t.push(act);
                if c2.1.is_empty() {
                    r1_violation = Some(t);
                    break 'outer;
                }
                if seen.insert(c2.clone()) {
                    next.push((t, c2));
                }
            }
        }
        layer = next;
    }
    RestrictionReport { r2_violation, r1_violation, bound: k, depth }
}

/// Tiles with an initial tile, a final tile, compatibility relations and a padding tile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingInstance {
    pub tiles: Vec<String>,
    pub initial: String,
    pub last: String,
    pub blank: String,
    /// Horizontal compatibility: `(left, right)`.
    pub horizontal: BTreeSet<(String, String)>,
    /// Vertical compatibility: `(below, above)` in row order.
    pub vertical: BTreeSet<(String, String)>,
}

impl TilingInstance {
    pub fn validate(&self) -> Result<(), ReduceError> {
        let mut seen = BTreeSet::new();
        for t in &self.tiles {
            if t == CUT {
                return Err(ReduceError::ReservedTile(t.clone()));
            }
            if !seen.insert(t) {
                return Err(ReduceError::DuplicateTile(t.clone()));
            }
        }
        for t in [&self.initial, &self.last, &self.blank] {
            if !seen.contains(t) {
                return Err(ReduceError::UnknownTile(t.clone()));
            }
        }
        for (x, y) in self.horizontal.iter().chain(&self.vertical) {
            for t in [x, y] {
                if !seen.contains(t) {
                    return Err(ReduceError::UnknownTile(t.clone()));
                }
            }
        }
        for t in &self.tiles {
            let pad = (t.clone(), self.blank.clone());
            if !self.horizontal.contains(&pad) || !self.vertical.contains(&pad) {
                return Err(ReduceError::Padding { blank: self.blank.clone(), tile: t.clone() });
            }
        }
        Ok(())
    }

    /// One-tile instance: tile `t` (initial and final) plus the blank `_`.
    pub fn singleton() -> Self {
        let pairs: BTreeSet<(String, String)> =
            [("t", "t"), ("t", "_"), ("_", "_")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        TilingInstance {
            tiles: vec!["t".into(), "_".into()],
            initial: "t".into(),
            last: "t".into(),
            blank: "_".into(),
            horizontal: pairs.clone(),
            vertical: pairs,
        }
    }

    /// Brute-force search for an `n`-tiling with at most `max_rows` rows that
    /// contains the final tile. Test oracle only.
    pub fn find_tiling(&self, n: usize, max_rows: usize) -> Option<Vec<Vec<String>>> {
        let rows = self.rows(n);
        let first: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == self.initial).collect();
        let mut stack: Vec<Vec<&Vec<String>>> = first.into_iter().map(|r| vec![r]).collect();
        while let Some(grid) = stack.pop() {
            if grid.iter().any(|r| r.contains(&self.last)) {
                return Some(grid.into_iter().cloned().collect());
            }
            if grid.len() >= max_rows {
                continue;
            }
            let top = grid[grid.len() - 1];
            for r in &rows {
                if (0..n).all(|j| self.vertical.contains(&(top[j].clone(), r[j].clone()))) {
                    let mut g = grid.clone();
                    g.push(r);
                    stack.push(g);
                }
            }
        }
        None
    }

    fn rows(&self, n: usize) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self.tiles.iter().map(|t| vec![t.clone()]).collect();
        for _ in 1..n {
            let mut next = Vec::new();
            for r in &rows {
                for t in &self.tiles {
                    if self.horizontal.contains(&(r[r.len() - 1].clone(), t.clone())) {
                        let mut r2 = r.clone();
                        r2.push(t.clone());
                        next.push(r2);
                    }
                }
            }
            rows = next;
        }
        rows
    }
}

/// The FIFO automaton that writes a first row, then checks each next row
/// against the previous one read back from the queue.
pub fn tiling_to_fifo(t: &TilingInstance) -> Result<FifoAutomaton, ReduceError> {
    t.validate()?;
    let mut alphabet: Vec<&str> = t.tiles.iter().map(String::as_str).collect();
    alphabet.push(CUT);
    let mut a = FifoAutomaton::new("tiling", &alphabet, "q0");
    a.add_state("q1");
    let first = |x: &str| format!("first({x})");
    let below = |x: &str| format!("below({x})");
    let left = |x: &str| format!("left({x})");
    let leftbelow = |x: &str, y: &str| format!("leftbelow({x},{y})");
    for x in &t.tiles {
        a.add_state(&first(x));
    }
    for x in &t.tiles {
        a.add_state(&below(x));
        a.add_state(&left(x));
    }
    for x in &t.tiles {
        for y in t.tiles.iter().map(String::as_str).chain([CUT]) {
            a.add_state(&leftbelow(x, y));
        }
    }

    a.send("q0", &t.initial, &first(&t.initial))?;
    for (x, y) in &t.horizontal {
        a.send(&first(x), y, &first(y))?;
    }
    for x in &t.tiles {
        a.send(&first(x), CUT, "q1")?;
    }
    for x in &t.tiles {
        a.recv("q1", x, &below(x))?;
    }
    for (x, y) in &t.vertical {
        a.send(&below(x), y, &left(y))?;
    }
    for x in &t.tiles {
        for y in t.tiles.iter().map(String::as_str).chain([CUT]) {
            a.recv(&left(x), y, &leftbelow(x, y))?;
        }
    }
    for x in &t.tiles {
        for y in &t.tiles {
            for z in &t.tiles {
                if t.horizontal.contains(&(x.clone(), z.clone())) && t.vertical.contains(&(y.clone(), z.clone())) {
                    a.send(&leftbelow(x, y), z, &left(z))?;
                }
            }
        }
    }
    for x in &t.tiles {
        a.send(&leftbelow(x, CUT), CUT, "q1")?;
    }
    Ok(a)
}

fn chan(a: &str, i: u8, j: u8) -> String {
    format!("{a}_{i}{j}")
}

/// The letter of an encoding system carrying automaton letter `letter` from
/// peer `i` to peer `j` (one-based).
pub fn encoded_letter(a: &FifoAutomaton, sys: &System, letter: usize, i: u8, j: u8) -> Option<Letter> {
    sys.messages().letter(&chan(a.alphabet.get(letter)?, i, j))
}

fn reduction_messages(a: &FifoAutomaton, name: &str) -> RawSystem {
    let mut raw = RawSystem::new(name, 3);
    for l in &a.alphabet {
        for (i, j) in [(1, 2), (1, 3), (3, 1), (3, 2), (2, 3)] {
            raw.msg(&chan(l, i, j), i as usize, j as usize);
        }
    }
    raw
}

/// Name of the intermediate state of peer 1 for a receive transition of `a`.
fn pending_state(a: &FifoAutomaton, &(f, act, t): &(usize, FifoAction, usize)) -> String {
    format!("q[{}?{}>{}]", a.states[f], a.alphabet[act.letter], a.states[t])
}

fn peer1(a: &FifoAutomaton) -> RawPeer {
    let mut p = RawPeer::new(1, &a.states[a.initial]);
    p.states = Some(a.states.clone());
    let mut extra = Vec::new();
    for tr in &a.transitions {
        let (f, act, t) = *tr;
        let (from, to, l) = (&a.states[f], &a.states[t], &a.alphabet[act.letter]);
        match act.polarity {
            Polarity::Send => {
                p.send(from, &chan(l, 1, 2), to);
            }
            Polarity::Receive => {
                let mid = pending_state(a, tr);
                p.send(from, &chan(l, 1, 3), &mid);
                p.recv(&mid, &chan(l, 3, 1), to);
                extra.push(mid);
            }
        }
    }
    p.states.as_mut().unwrap().extend(extra);
    p
}

fn peer2_transitions(a: &FifoAutomaton, p: &mut RawPeer) {
    for l in &a.alphabet {
        let (s1, s2) = (format!("q_{l},1"), format!("q_{l},2"));
        p.recv("q0_2", &chan(l, 3, 2), &s1);
        p.recv("q1_2", &chan(l, 3, 2), &s1);
        p.recv(&s1, &chan(l, 1, 2), &s2);
        p.send(&s2, &chan(l, 2, 3), "q1_2");
    }
}

fn peer2_prime_transitions(a: &FifoAutomaton, m: &str, p: &mut RawPeer) {
    let mut states = vec!["q0_2".to_string(), "q0_2'".to_string()];
    states.extend(a.alphabet.iter().filter(|l| *l != m).map(|l| format!("q'_{l},1")));
    states.push("q_bot".to_string());
    for l in &a.alphabet {
        p.recv("q0_2", &chan(l, 1, 2), "q0_2'");
        for q in &states[1..] {
            p.recv(q, &chan(l, 1, 2), q);
        }
    }
    for l in a.alphabet.iter().filter(|l| *l != m) {
        let s = format!("q'_{l},1");
        p.recv("q0_2", &chan(l, 3, 2), &s);
        p.recv("q0_2'", &chan(l, 3, 2), &s);
        p.send(&s, &chan(l, 2, 3), "q0_2'");
    }
    for q in &states {
        p.recv(q, &chan(m, 3, 2), "q_bot");
    }
}

fn peer3(a: &FifoAutomaton) -> RawPeer {
    let mut p = RawPeer::new(3, "q0_3");
    for l in &a.alphabet {
        let (s1, s2, s3) = (format!("q_{l},1"), format!("q_{l},2"), format!("q_{l},3"));
        p.recv("q0_3", &chan(l, 1, 3), &s1);
        p.send(&s1, &chan(l, 3, 2), &s2);
        p.recv(&s2, &chan(l, 2, 3), &s3);
        p.send(&s3, &chan(l, 3, 1), "q0_3");
    }
    p
}

fn check_special(a: &FifoAutomaton, m: &str) -> Result<(), ReduceError> {
    a.letter(m).map(|_| ()).ok_or_else(|| ReduceError::UnknownLetter(m.to_string()))
}

/// Peer 1 mimics the automaton over channel 1→2; peer 3 relays dequeue orders
/// to peer 2, which executes them and acknowledges.
pub fn fifo_to_system(a: &FifoAutomaton) -> Result<System, ReduceError> {
    let mut raw = reduction_messages(a, &format!("{}-s", a.name));
    let mut p2 = RawPeer::new(2, "q0_2");
    peer2_transitions(a, &mut p2);
    raw.peer(peer1(a)).peer(p2).peer(peer3(a));
    Ok(validate_system(&raw)?)
}

/// As [`fifo_to_system`], with peer 2 replaced by a variant that ignores
/// dequeue orders for letters other than `m` and blocks on an order for `m`.
pub fn fifo_to_system_prime(a: &FifoAutomaton, m: &str) -> Result<System, ReduceError> {
    check_special(a, m)?;
    let mut raw = reduction_messages(a, &format!("{}-s-prime", a.name));
    let mut p2 = RawPeer::new(2, "q0_2");
    peer2_prime_transitions(a, m, &mut p2);
    raw.peer(peer1(a)).peer(p2).peer(peer3(a));
    Ok(validate_system(&raw)?)
}

/// Both variants of peer 2 joined at their common initial state.
pub fn fifo_to_system_merged(a: &FifoAutomaton, m: &str) -> Result<System, ReduceError> {
    check_special(a, m)?;
    let mut raw = reduction_messages(a, &format!("{}-s-merged", a.name));
    let mut p2 = RawPeer::new(2, "q0_2");
    peer2_transitions(a, &mut p2);
    peer2_prime_transitions(a, m, &mut p2);
    raw.peer(peer1(a)).peer(p2).peer(peer3(a));
    Ok(validate_system(&raw)?)
}

/// Letter lookup for systems built by this module.
struct Channels<'a> {
    a: &'a FifoAutomaton,
    sys: &'a System,
}

impl Channels<'_> {
    fn get(&self, letter: usize, i: u8, j: u8) -> Letter {
        let name = chan(&self.a.alphabet[letter], i, j);
        self.sys.messages().letter(&name).unwrap_or_else(|| panic!("system lacks letter {name}"))
    }

    fn sync(&self, out: &mut Vec<Action>, letter: usize, i: u8, j: u8) {
        let l = self.get(letter, i, j);
        out.push(Action::send(l));
        out.push(Action::receive(l));
    }
}

/// Enqueue maps to a send on 1→2; dequeue maps to the relayed order,
/// the dequeue by peer 2, and the relayed acknowledgement.
pub fn morphism_h(a: &FifoAutomaton, sys: &System, t: &[FifoAction]) -> Trace {
    let c = Channels { a, sys };
    let mut out = Vec::new();
    for &act in t {
        match act.polarity {
            Polarity::Send => out.push(Action::send(c.get(act.letter, 1, 2))),
            Polarity::Receive => {
                c.sync(&mut out, act.letter, 1, 3);
                c.sync(&mut out, act.letter, 3, 2);
                out.push(Action::receive(c.get(act.letter, 1, 2)));
                c.sync(&mut out, act.letter, 2, 3);
                c.sync(&mut out, act.letter, 3, 1);
            }
        }
    }
    Trace::from(out)
}

/// Synchronous image used for the variant system: enqueues are rendezvous on
/// 1→2, dequeues are acknowledged without touching the queue, and a dequeue
/// of `m` stops after the order reaches peer 2.
pub fn morphism_h_prime(a: &FifoAutomaton, sys: &System, m: usize, t: &[FifoAction]) -> Trace {
    let c = Channels { a, sys };
    let mut out = Vec::new();
    for &act in t {
        match act.polarity {
            Polarity::Send => c.sync(&mut out, act.letter, 1, 2),
            Polarity::Receive => {
                c.sync(&mut out, act.letter, 1, 3);
                c.sync(&mut out, act.letter, 3, 2);
                if act.letter != m {
                    c.sync(&mut out, act.letter, 2, 3);
                    c.sync(&mut out, act.letter, 3, 1);
                }
            }
        }
    }
    Trace::from(out)
}

/// Turns each send on 1→2 into a rendezvous and drops the receives on 1→2.
pub fn morphism_h_doubleprime(sys: &System, t: &Trace) -> Trace {
    let ms = sys.messages();
    let on_12 = |l| ms.src(l) == 0 && ms.dst(l) == 1;
    let mut out = Vec::new();
    for &act in t {
        if !on_12(act.letter) {
            out.push(act);
        } else if act.is_send() {
            out.push(act);
            out.push(Action::receive(act.letter));
        }
    }
    Trace::from(out)
}

impl fmt::Display for FifoAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::write_fifo(self))
    }
}
