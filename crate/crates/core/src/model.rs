//! Message sets, peers, systems and their operational semantics.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::trace::{Action, Polarity, Trace};

/// Zero-based peer index.
pub type PeerId = usize;

/// A message letter, as an index into its [`MessageSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u32);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A control state of one peer, as an index into that peer's state table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate letter `{letter}`")]
    DuplicateLetter { letter: String },
    #[error("self-loop channel: letter `{letter}` has source and destination {peer}")]
    SelfLoopChannel { letter: String, peer: usize },
    #[error("letter `{letter}` names peer {peer}, but the system has {peers} peers")]
    PeerOutOfRange { letter: String, peer: usize, peers: usize },
    #[error("unknown letter `{letter}`")]
    UnknownLetter { letter: String },
    #[error("foreign action `{action}` on peer {peer}")]
    ForeignAction { peer: usize, action: String },
    #[error("peer {peer} references unknown state `{state}`")]
    UnknownState { peer: usize, state: String },
    #[error("peer {peer} has no initial state")]
    MissingInitial { peer: usize },
    #[error("peer {peer} is defined twice")]
    DuplicatePeer { peer: usize },
    #[error("peer {peer} is not defined")]
    MissingPeer { peer: usize },
    #[error("peer id {peer} is outside 1..{peers}")]
    BadPeerId { peer: usize, peers: usize },
    #[error("a system needs at least one peer")]
    NoPeers,
    #[error("action `{action}` is not enabled")]
    NotEnabled { action: String },
}

/// Failure to execute a trace from the initial configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action {index} (`{action}`) is not executable")]
pub struct RunError {
    pub index: usize,
    pub action: String,
}

/// A finite alphabet of messages, each carrying its source and destination peer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageSet {
    peers: usize,
    names: Vec<String>,
    src: Vec<PeerId>,
    dst: Vec<PeerId>,
    by_name: HashMap<String, Letter>,
}

impl MessageSet {
    pub fn new(peers: usize) -> Self {
        MessageSet { peers, names: Vec::new(), src: Vec::new(), dst: Vec::new(), by_name: HashMap::new() }
    }

    /// Adds a letter sent by `src` to `dst` (zero-based peers).
    pub fn add(&mut self, name: &str, src: PeerId, dst: PeerId) -> Result<Letter, ModelError> {
        if self.by_name.contains_key(name) {
            return Err(ModelError::DuplicateLetter { letter: name.to_string() });
        }
        for p in [src, dst] {
            if p >= self.peers {
                return Err(ModelError::PeerOutOfRange { letter: name.to_string(), peer: p + 1, peers: self.peers });
            }
        }
        if src == dst {
            return Err(ModelError::SelfLoopChannel { letter: name.to_string(), peer: src + 1 });
        }
        let letter = Letter(self.names.len() as u32);
        self.names.push(name.to_string());
        self.src.push(src);
        self.dst.push(dst);
        self.by_name.insert(name.to_string(), letter);
        Ok(letter)
    }

    pub fn peer_count(&self) -> usize {
        self.peers
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.names.len() as u32).map(Letter)
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, letter: Letter) -> &str {
        &self.names[letter.index()]
    }

    pub fn src(&self, letter: Letter) -> PeerId {
        self.src[letter.index()]
    }

    pub fn dst(&self, letter: Letter) -> PeerId {
        self.dst[letter.index()]
    }

    /// `a@1>2`: the letter name with its one-based channel.
    pub fn qualified(&self, letter: Letter) -> String {
        format!("{}@{}>{}", self.name(letter), self.src(letter) + 1, self.dst(letter) + 1)
    }

    /// Renders a send word with channel suffixes, space separated.
    pub fn format_word(&self, word: &[Letter]) -> String {
        word.iter().map(|&l| self.qualified(l)).collect::<Vec<_>>().join(" ")
    }

    /// The peer executing `action`: the source for a send, the destination for a receive.
    pub fn peer_of(&self, action: Action) -> PeerId {
        match action.polarity {
            Polarity::Send => self.src(action.letter),
            Polarity::Receive => self.dst(action.letter),
        }
    }

    pub fn topology(&self) -> Topology {
        Topology { peers: self.peers, edges: self.letters().map(|l| (self.src(l), self.dst(l))).collect() }
    }
}

/// The communication graph induced by a message set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub peers: usize,
    pub edges: BTreeSet<(PeerId, PeerId)>,
}

impl Topology {
    /// True iff the edges are exactly `i -> i+1 mod n`.
    pub fn is_oriented_ring(&self) -> bool {
        let ring: BTreeSet<_> = (0..self.peers).map(|i| (i, (i + 1) % self.peers)).collect();
        self.edges == ring
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

/// One finite state machine. Every state is accepting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peer {
    states: Vec<String>,
    initial: StateId,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<(Action, StateId)>>,
}

impl Peer {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state.index()]
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(|i| StateId(i as u32))
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, state: StateId) -> &[(Action, StateId)] {
        &self.outgoing[state.index()]
    }

    /// Targets reachable from `state` by one `action` transition.
    pub fn successors(&self, state: StateId, action: Action) -> impl Iterator<Item = StateId> + '_ {
        self.outgoing(state).iter().filter(move |(a, _)| *a == action).map(|&(_, q)| q)
    }
}

/// Unvalidated system description, as produced by parsers and generators.
///
/// Peer ids here are one-based, matching the text format.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawSystem {
    pub name: String,
    pub peers: usize,
    pub messages: Vec<RawMessage>,
    pub peer_defs: Vec<RawPeer>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawMessage {
    pub name: String,
    pub src: usize,
    pub dst: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawPeer {
    pub id: usize,
    pub initial: Option<String>,
    /// Optional explicit state list; when present, every referenced state must be in it.
    pub states: Option<Vec<String>>,
    pub transitions: Vec<RawTransition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTransition {
    pub from: String,
    pub polarity: Polarity,
    pub letter: String,
    pub to: String,
}

impl RawPeer {
    pub fn new(id: usize, initial: &str) -> Self {
        RawPeer { id, initial: Some(initial.to_string()), states: None, transitions: Vec::new() }
    }

    pub fn send(&mut self, from: &str, letter: &str, to: &str) -> &mut Self {
        self.transitions.push(RawTransition {
            from: from.into(),
            polarity: Polarity::Send,
            letter: letter.into(),
            to: to.into(),
        });
        self
    }

    pub fn recv(&mut self, from: &str, letter: &str, to: &str) -> &mut Self {
        self.transitions.push(RawTransition {
            from: from.into(),
            polarity: Polarity::Receive,
            letter: letter.into(),
            to: to.into(),
        });
        self
    }
}

impl RawSystem {
    pub fn new(name: &str, peers: usize) -> Self {
        RawSystem { name: name.to_string(), peers, ..Default::default() }
    }

    pub fn msg(&mut self, name: &str, src: usize, dst: usize) -> &mut Self {
        self.messages.push(RawMessage { name: name.to_string(), src, dst });
        self
    }

    pub fn peer(&mut self, peer: RawPeer) -> &mut Self {
        self.peer_defs.push(peer);
        self
    }
}

/// A validated system: a message set and one peer per participant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    name: String,
    messages: MessageSet,
    peers: Vec<Peer>,
}

/// Checks every structural invariant of `raw` and builds the system.
pub fn validate_system(raw: &RawSystem) -> Result<System, ModelError> {
    if raw.peers == 0 {
        return Err(ModelError::NoPeers);
    }
    let mut messages = MessageSet::new(raw.peers);
    for m in &raw.messages {
        for p in [m.src, m.dst] {
            if p == 0 || p > raw.peers {
                return Err(ModelError::PeerOutOfRange { letter: m.name.clone(), peer: p, peers: raw.peers });
            }
        }
        messages.add(&m.name, m.src - 1, m.dst - 1)?;
    }

    let mut defs: Vec<Option<&RawPeer>> = vec![None; raw.peers];
    for def in &raw.peer_defs {
        if def.id == 0 || def.id > raw.peers {
            return Err(ModelError::BadPeerId { peer: def.id, peers: raw.peers });
        }
        if defs[def.id - 1].replace(def).is_some() {
            return Err(ModelError::DuplicatePeer { peer: def.id });
        }
    }

    let mut peers = Vec::with_capacity(raw.peers);
    for (idx, def) in defs.into_iter().enumerate() {
        let def = def.ok_or(ModelError::MissingPeer { peer: idx + 1 })?;
        peers.push(build_peer(&messages, idx, def)?);
    }
    Ok(System { name: raw.name.clone(), messages, peers })
}

fn build_peer(messages: &MessageSet, idx: PeerId, def: &RawPeer) -> Result<Peer, ModelError> {
    let peer_no = idx + 1;
    let initial = def.initial.as_ref().ok_or(ModelError::MissingInitial { peer: peer_no })?;
    let mut states: Vec<String> = Vec::new();
    let mut index: HashMap<String, StateId> = HashMap::new();
    let declared = def.states.as_ref();

    let mut intern = |name: &str| -> Result<StateId, ModelError> {
        if let Some(&id) = index.get(name) {
            return Ok(id);
        }
        if let Some(list) = declared {
            if !list.iter().any(|s| s == name) {
                return Err(ModelError::UnknownState { peer: peer_no, state: name.to_string() });
            }
        }
        let id = StateId(states.len() as u32);
        states.push(name.to_string());
        index.insert(name.to_string(), id);
        Ok(id)
    };

    let initial = intern(initial)?;
    if let Some(list) = declared {
        for s in list {
            intern(s)?;
        }
    }
    let mut transitions = Vec::with_capacity(def.transitions.len());
    for t in &def.transitions {
        let letter =
            messages.letter(&t.letter).ok_or_else(|| ModelError::UnknownLetter { letter: t.letter.clone() })?;
        let action = Action { polarity: t.polarity, letter };
        if messages.peer_of(action) != idx {
            return Err(ModelError::ForeignAction {
                peer: peer_no,
                action: format!("{}{}", t.polarity.sigil(), t.letter),
            });
        }
        let from = intern(&t.from)?;
        let to = intern(&t.to)?;
        let tr = Transition { from, action, to };
        if !transitions.contains(&tr) {
            transitions.push(tr);
        }
    }
    let mut outgoing = vec![Vec::new(); states.len()];
    for t in &transitions {
        outgoing[t.from.index()].push((t.action, t.to));
    }
    Ok(Peer { states, initial, transitions, outgoing })
}

/// Communication discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticsKind {
    /// One FIFO queue per ordered pair of peers.
    P2pFifo,
    /// One FIFO queue per receiver, shared by all senders.
    MailboxFifo,
    /// One unordered multiset per ordered pair of peers.
    P2pBag,
}

/// Identifies a buffer object under a given discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelKey {
    Pair(PeerId, PeerId),
    Mailbox(PeerId),
}

impl fmt::Display for ChannelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelKey::Pair(i, j) => write!(f, "{}>{}", i + 1, j + 1),
            ChannelKey::Mailbox(j) => write!(f, ">{}", j + 1),
        }
    }
}

impl SemanticsKind {
    pub const ALL: [SemanticsKind; 3] = [SemanticsKind::P2pFifo, SemanticsKind::MailboxFifo, SemanticsKind::P2pBag];

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticsKind::P2pFifo => "p2p",
            SemanticsKind::MailboxFifo => "mailbox",
            SemanticsKind::P2pBag => "bag",
        }
    }

    pub fn is_fifo(self) -> bool {
        !matches!(self, SemanticsKind::P2pBag)
    }

    /// Number of buffer slots in a configuration over `peers` peers.
    pub fn slot_count(self, peers: usize) -> usize {
        match self {
            SemanticsKind::MailboxFifo => peers,
            _ => peers * peers.saturating_sub(1),
        }
    }

    /// Slot holding `letter` in transit. Pair slots are ordered lexicographically
    /// over `(i, j)` with `i != j`.
    pub fn slot(self, messages: &MessageSet, letter: Letter) -> usize {
        let (i, j) = (messages.src(letter), messages.dst(letter));
        match self {
            SemanticsKind::MailboxFifo => j,
            _ => pair_slot(messages.peer_count(), i, j),
        }
    }

    pub fn channel_key(self, peers: usize, slot: usize) -> ChannelKey {
        match self {
            SemanticsKind::MailboxFifo => ChannelKey::Mailbox(slot),
            _ => {
                let i = slot / (peers - 1);
                let r = slot % (peers - 1);
                let j = if r >= i { r + 1 } else { r };
                ChannelKey::Pair(i, j)
            }
        }
    }
}

fn pair_slot(peers: usize, i: PeerId, j: PeerId) -> usize {
    i * (peers - 1) + if j > i { j - 1 } else { j }
}

impl fmt::Display for SemanticsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticsKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "p2p" | "p2p-fifo" => Ok(SemanticsKind::P2pFifo),
            "mailbox" | "mailbox-fifo" => Ok(SemanticsKind::MailboxFifo),
            "bag" | "p2p-bag" => Ok(SemanticsKind::P2pBag),
            _ => Err(format!("unknown semantics `{s}` (expected p2p, mailbox or bag)")),
        }
    }
}

/// Control states plus buffer contents.
///
/// `buffers` is indexed by [`SemanticsKind::slot`]. FIFO contents are kept in
/// arrival order; bag contents are kept sorted so that equal multisets compare
/// equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub control: Vec<StateId>,
    pub buffers: Vec<Vec<Letter>>,
}

impl Configuration {
    pub fn is_stable(&self) -> bool {
        self.buffers.iter().all(Vec::is_empty)
    }

    pub fn max_buffer_len(&self) -> usize {
        self.buffers.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn display<'a>(&'a self, system: &'a System, sem: SemanticsKind) -> ConfigDisplay<'a> {
        ConfigDisplay { config: self, system, sem }
    }
}

pub struct ConfigDisplay<'a> {
    config: &'a Configuration,
    system: &'a System,
    sem: SemanticsKind,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sys = self.system;
        let names: Vec<&str> =
            self.config.control.iter().enumerate().map(|(i, &q)| sys.peer(i).state_name(q)).collect();
        write!(f, "({}", names.join(", "))?;
        let mut first = true;
        for (slot, content) in self.config.buffers.iter().enumerate() {
            if content.is_empty() {
                continue;
            }
            f.write_str(if first { " | " } else { ", " })?;
            first = false;
            let key = self.sem.channel_key(sys.peer_count(), slot);
            let word: Vec<&str> = content.iter().map(|&l| sys.messages().name(l)).collect();
            write!(f, "{key}: {}", word.join(" "))?;
        }
        f.write_str(")")
    }
}

/// One enabled peer transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub peer: PeerId,
    pub action: Action,
    pub target: StateId,
}

impl System {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn messages(&self) -> &MessageSet {
        &self.messages
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    pub fn peer(&self, i: PeerId) -> &Peer {
        &self.peers[i]
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn topology(&self) -> Topology {
        self.messages.topology()
    }

    pub fn initial_configuration(&self, sem: SemanticsKind) -> Configuration {
        Configuration {
            control: self.peers.iter().map(Peer::initial).collect(),
            buffers: vec![Vec::new(); sem.slot_count(self.peer_count())],
        }
    }

    /// Whether the buffer addressed by `letter` lets a receive of `letter` proceed.
    pub fn can_receive(&self, sem: SemanticsKind, c: &Configuration, letter: Letter) -> bool {
        let content = &c.buffers[sem.slot(&self.messages, letter)];
        if sem.is_fifo() {
            content.first() == Some(&letter)
        } else {
            content.binary_search(&letter).is_ok()
        }
    }

    /// All transitions enabled in `c`, with no bound on buffer sizes.
    pub fn enabled_moves(&self, sem: SemanticsKind, c: &Configuration) -> Vec<Move> {
        let mut moves = Vec::new();
        for (peer, p) in self.peers.iter().enumerate() {
            for &(action, target) in p.outgoing(c.control[peer]) {
                let ok = match action.polarity {
                    Polarity::Send => true,
                    Polarity::Receive => self.can_receive(sem, c, action.letter),
                };
                if ok {
                    moves.push(Move { peer, action, target });
                }
            }
        }
        moves
    }

    pub fn enabled_actions(&self, sem: SemanticsKind, c: &Configuration) -> BTreeSet<Action> {
        self.enabled_moves(sem, c).into_iter().map(|m| m.action).collect()
    }

    /// Executes an enabled move. The move must come from [`System::enabled_moves`].
    pub fn apply(&self, sem: SemanticsKind, c: &Configuration, mv: &Move) -> Configuration {
        let mut next = c.clone();
        next.control[mv.peer] = mv.target;
        let slot = sem.slot(&self.messages, mv.action.letter);
        let content = &mut next.buffers[slot];
        match (mv.action.polarity, sem.is_fifo()) {
            (Polarity::Send, true) => content.push(mv.action.letter),
            (Polarity::Send, false) => {
                let pos = content.partition_point(|&l| l <= mv.action.letter);
                content.insert(pos, mv.action.letter);
            }
            (Polarity::Receive, true) => {
                content.remove(0);
            }
            (Polarity::Receive, false) => {
                let pos = content.binary_search(&mv.action.letter).expect("receive not enabled");
                content.remove(pos);
            }
        }
        next
    }

    /// Every configuration reachable from `c` by one `action` step.
    ///
    /// Peers may be nondeterministic, so several successors can exist.
    pub fn step(
        &self,
        sem: SemanticsKind,
        c: &Configuration,
        action: Action,
    ) -> Result<Vec<Configuration>, ModelError> {
        let succ: Vec<Configuration> =
            self.enabled_moves(sem, c).iter().filter(|m| m.action == action).map(|m| self.apply(sem, c, m)).collect();
        if succ.is_empty() {
            Err(ModelError::NotEnabled { action: action.display(&self.messages).to_string() })
        } else {
            Ok(succ)
        }
    }

    /// All configurations reached by executing `trace` from the initial configuration.
    pub fn run_all(&self, sem: SemanticsKind, trace: &Trace) -> Result<BTreeSet<Configuration>, RunError> {
        let mut current = BTreeSet::from([self.initial_configuration(sem)]);
        for (index, &action) in trace.iter().enumerate() {
            let mut next = BTreeSet::new();
            for c in &current {
                if let Ok(succ) = self.step(sem, c, action) {
                    next.extend(succ);
                }
            }
            if next.is_empty() {
                return Err(RunError { index, action: action.display(&self.messages).to_string() });
            }
            current = next;
        }
        Ok(current)
    }

    /// Executes `trace` from the initial configuration.
    ///
    /// Returns the least reached configuration when peers are nondeterministic;
    /// use [`System::run_all`] for the full set.
    pub fn run(&self, sem: SemanticsKind, trace: &Trace) -> Result<Configuration, RunError> {
        let all = self.run_all(sem, trace)?;
        Ok(all.into_iter().next().expect("run_all never returns an empty set"))
    }
}
