//! Actions, traces and the predicates defined over them.
//!
//! All predicates here use point-to-point FIFO channels: a trace is read
//! against one queue per ordered pair of peers.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{Letter, MessageSet, PeerId, SemanticsKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Send,
    Receive,
}

impl Polarity {
    pub fn sigil(self) -> char {
        match self {
            Polarity::Send => '!',
            Polarity::Receive => '?',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub polarity: Polarity,
    pub letter: Letter,
}

impl Action {
    pub fn send(letter: Letter) -> Self {
        Action { polarity: Polarity::Send, letter }
    }

    pub fn receive(letter: Letter) -> Self {
        Action { polarity: Polarity::Receive, letter }
    }

    pub fn is_send(self) -> bool {
        self.polarity == Polarity::Send
    }

    pub fn is_receive(self) -> bool {
        self.polarity == Polarity::Receive
    }

    pub fn display(self, ms: &MessageSet) -> impl fmt::Display + '_ {
        ActionDisplay { action: self, ms }
    }
}

struct ActionDisplay<'a> {
    action: Action,
    ms: &'a MessageSet,
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.action.polarity.sigil(), self.ms.name(self.action.letter))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("bad action token `{token}` (expected !a, ?a or !?a)")]
    BadToken { token: String },
    #[error("unknown letter `{letter}` in token `{token}`")]
    UnknownLetter { token: String, letter: String },
}

/// A finite sequence of actions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trace(Vec<Action>);

impl From<Vec<Action>> for Trace {
    fn from(actions: Vec<Action>) -> Self {
        Trace(actions)
    }
}

impl FromIterator<Action> for Trace {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        Trace(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a Action;
    type IntoIter = std::slice::Iter<'a, Action>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Trace {
    pub fn new() -> Self {
        Trace(Vec::new())
    }

    /// Parses whitespace-separated tokens `!a`, `?a` and `!?a` (shorthand for `!a ?a`).
    ///
    /// A channel suffix such as `a@1>2` is accepted and ignored.
    pub fn parse(ms: &MessageSet, text: &str) -> Result<Trace, TraceError> {
        let mut actions = Vec::new();
        for token in text.split_whitespace() {
            let (polarities, rest): (&[Polarity], &str) = if let Some(r) = token.strip_prefix("!?") {
                (&[Polarity::Send, Polarity::Receive], r)
            } else if let Some(r) = token.strip_prefix('!') {
                (&[Polarity::Send], r)
            } else if let Some(r) = token.strip_prefix('?') {
                (&[Polarity::Receive], r)
            } else {
                return Err(TraceError::BadToken { token: token.to_string() });
            };
            let name = rest.split('@').next().unwrap_or("");
            if name.is_empty() {
                return Err(TraceError::BadToken { token: token.to_string() });
            }
            let letter = ms
                .letter(name)
                .ok_or_else(|| TraceError::UnknownLetter { token: token.to_string(), letter: name.to_string() })?;
            actions.extend(polarities.iter().map(|&polarity| Action { polarity, letter }));
        }
        Ok(Trace(actions))
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Action> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, action: Action) {
        self.0.push(action);
    }

    pub fn pop(&mut self) -> Option<Action> {
        self.0.pop()
    }

    pub fn concat(&self, other: &Trace) -> Trace {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Trace(v)
    }

    pub fn prefix(&self, len: usize) -> Trace {
        Trace(self.0[..len].to_vec())
    }

    /// Renders the trace, writing an adjacent `!a ?a` pair as `!?a`.
    pub fn display<'a>(&'a self, ms: &'a MessageSet) -> impl fmt::Display + 'a {
        TraceDisplay { trace: self, ms }
    }

    pub fn send_projection(&self) -> Vec<Letter> {
        self.0.iter().filter(|a| a.is_send()).map(|a| a.letter).collect()
    }

    pub fn recv_projection(&self) -> Vec<Letter> {
        self.0.iter().filter(|a| a.is_receive()).map(|a| a.letter).collect()
    }

    pub fn peer_projection(&self, ms: &MessageSet, peer: PeerId) -> Trace {
        self.0.iter().copied().filter(|&a| ms.peer_of(a) == peer).collect()
    }

    pub fn channel_projection(&self, ms: &MessageSet, src: PeerId, dst: PeerId) -> Trace {
        self.0.iter().copied().filter(|a| ms.src(a.letter) == src && ms.dst(a.letter) == dst).collect()
    }

    /// Content of channel `src -> dst` after the trace, or `None` when the
    /// receives on that channel are not a prefix of its sends.
    pub fn buffer_after(&self, ms: &MessageSet, src: PeerId, dst: PeerId) -> Option<Vec<Letter>> {
        let chan = self.channel_projection(ms, src, dst);
        let sent = chan.send_projection();
        let received = chan.recv_projection();
        sent.strip_prefix(received.as_slice()).map(<[Letter]>::to_vec)
    }

    /// Largest channel occupancy over all prefixes, or `None` if the trace is not FIFO.
    pub fn max_occupancy(&self, ms: &MessageSet) -> Option<usize> {
        let sem = SemanticsKind::P2pFifo;
        let mut queues: Vec<VecDeque<Letter>> = vec![VecDeque::new(); sem.slot_count(ms.peer_count())];
        let mut max = 0;
        for a in &self.0 {
            let q = &mut queues[sem.slot(ms, a.letter)];
            match a.polarity {
                Polarity::Send => {
                    q.push_back(a.letter);
                    max = max.max(q.len());
                }
                Polarity::Receive => {
                    if q.pop_front() != Some(a.letter) {
                        return None;
                    }
                }
            }
        }
        Some(max)
    }

    pub fn is_fifo(&self, ms: &MessageSet) -> bool {
        self.max_occupancy(ms).is_some()
    }

    /// FIFO with every channel holding at most `k` letters along every prefix.
    /// For `k = 0` this is [`Trace::is_synchronous`].
    pub fn is_k_bounded(&self, ms: &MessageSet, k: usize) -> bool {
        if k == 0 {
            return self.is_synchronous();
        }
        matches!(self.max_occupancy(ms), Some(m) if m <= k)
    }

    /// Of the form `!?a1 !?a2 ...`.
    pub fn is_synchronous(&self) -> bool {
        self.0.len().is_multiple_of(2)
            && self.0.chunks(2).all(|p| p[0].is_send() && p[1] == Action::receive(p[0].letter))
    }

    /// FIFO and every channel empty at the end.
    pub fn is_stable(&self, ms: &MessageSet) -> bool {
        self.is_fifo(ms) && self.send_projection().len() == self.recv_projection().len()
    }
}

struct TraceDisplay<'a> {
    trace: &'a Trace,
    ms: &'a MessageSet,
}

impl fmt::Display for TraceDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let acts = &self.trace.0;
        let mut i = 0;
        let mut first = true;
        while i < acts.len() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let a = acts[i];
            if a.is_send() && acts.get(i + 1) == Some(&Action::receive(a.letter)) {
                write!(f, "!?{}", self.ms.name(a.letter))?;
                i += 2;
            } else {
                write!(f, "{}", a.display(self.ms))?;
                i += 1;
            }
        }
        Ok(())
    }
}

/// Both traces FIFO and every peer sees the same action sequence in both.
pub fn causally_equivalent(ms: &MessageSet, t1: &Trace, t2: &Trace) -> bool {
    t1.is_fifo(ms)
        && t2.is_fifo(ms)
        && (0..ms.peer_count()).all(|i| t1.peer_projection(ms, i) == t2.peer_projection(ms, i))
}

/// The synchronous trace sending the same letters in the same order.
pub fn sync_trace_of(t: &Trace) -> Trace {
    t.send_projection().into_iter().flat_map(|l| [Action::send(l), Action::receive(l)]).collect()
}

/// All interleavings of `u` and `v` that keep the internal order of each.
pub fn shuffles(u: &Trace, v: &Trace) -> BTreeSet<Trace> {
    let mut out = BTreeSet::new();
    let mut cur = Vec::with_capacity(u.len() + v.len());
    shuffle_rec(u.actions(), v.actions(), &mut cur, &mut out);
    out
}

fn shuffle_rec(u: &[Action], v: &[Action], cur: &mut Vec<Action>, out: &mut BTreeSet<Trace>) {
    if u.is_empty() || v.is_empty() {
        let mut t = cur.clone();
        t.extend_from_slice(u);
        t.extend_from_slice(v);
        out.insert(Trace(t));
        return;
    }
    cur.push(u[0]);
    shuffle_rec(&u[1..], v, cur, out);
    cur.pop();
    cur.push(v[0]);
    shuffle_rec(u, &v[1..], cur, out);
    cur.pop();
}

/// Searches for a `k`-bounded trace causally equivalent to `t`.
///
/// Backtracks over interleavings of the per-peer projections, pruning any
/// prefix that breaks FIFO order or overfills a channel. Dead position
/// vectors are memoised. Candidates are tried in the order they occur in
/// `t`, so a trace that is already `k`-bounded is returned unchanged.
/// Worst case is exponential in the number of peers' positions.
pub fn exists_equiv_k_bounded(ms: &MessageSet, t: &Trace, k: usize) -> Option<Trace> {
    if !t.is_fifo(ms) {
        return None;
    }
    let np = ms.peer_count();
    // Per peer: its projected actions with their index in `t`.
    let mut proj: Vec<Vec<(usize, Action)>> = vec![Vec::new(); np];
    for (idx, &a) in t.iter().enumerate() {
        proj[ms.peer_of(a)].push((idx, a));
    }
    let mut search = BoundedSearch {
        ms,
        k,
        proj,
        queues: vec![VecDeque::new(); SemanticsKind::P2pFifo.slot_count(np)],
        pos: vec![0; np],
        dead: HashSet::new(),
        out: Vec::with_capacity(t.len()),
        total: t.len(),
    };
    if search.dfs() {
        Some(Trace(search.out))
    } else {
        None
    }
}

struct BoundedSearch<'a> {
    ms: &'a MessageSet,
    k: usize,
    proj: Vec<Vec<(usize, Action)>>,
    queues: Vec<VecDeque<Letter>>,
    pos: Vec<usize>,
    dead: HashSet<Vec<usize>>,
    out: Vec<Action>,
    total: usize,
}

impl BoundedSearch<'_> {
    fn next(&self, peer: PeerId) -> Option<(usize, Action)> {
        self.proj[peer].get(self.pos[peer]).copied()
    }

    fn slot(&self, l: Letter) -> usize {
        SemanticsKind::P2pFifo.slot(self.ms, l)
    }

    fn dfs(&mut self) -> bool {
        if self.out.len() == self.total {
            return true;
        }
        if self.dead.contains(&self.pos) {
            return false;
        }
        let mut cands: Vec<(usize, PeerId, Action)> =
            (0..self.pos.len()).filter_map(|p| self.next(p).map(|(i, a)| (i, p, a))).collect();
        cands.sort();
        for (_, peer, a) in cands {
            let slot = self.slot(a.letter);
            if self.k == 0 {
                // Rendezvous: the send must be matched at once by the receiver's next action.
                if !a.is_send() {
                    continue;
                }
                let dst = self.ms.dst(a.letter);
                if self.next(dst).map(|(_, b)| b) != Some(Action::receive(a.letter)) {
                    continue;
                }
                self.pos[peer] += 1;
                self.pos[dst] += 1;
                self.out.push(a);
                self.out.push(Action::receive(a.letter));
                if self.dfs() {
                    return true;
                }
                self.out.truncate(self.out.len() - 2);
                self.pos[peer] -= 1;
                self.pos[dst] -= 1;
                continue;
            }
            match a.polarity {
                Polarity::Send => {
                    if self.queues[slot].len() >= self.k {
                        continue;
                    }
                    self.queues[slot].push_back(a.letter);
                    self.pos[peer] += 1;
                    self.out.push(a);
                    if self.dfs() {
                        return true;
                    }
                    self.out.pop();
                    self.pos[peer] -= 1;
                    self.queues[slot].pop_back();
                }
                Polarity::Receive => {
                    if self.queues[slot].front() != Some(&a.letter) {
                        continue;
                    }
                    self.queues[slot].pop_front();
                    self.pos[peer] += 1;
                    self.out.push(a);
                    if self.dfs() {
                        return true;
                    }
                    self.out.pop();
                    self.pos[peer] -= 1;
                    self.queues[slot].push_front(a.letter);
                }
            }
        }
        self.dead.insert(self.pos.clone());
        false
    }
}
