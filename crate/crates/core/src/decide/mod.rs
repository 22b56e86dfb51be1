//! Decision procedures comparing bounded asynchronous behaviour with rendezvous behaviour.

mod bisim;
mod normalize;
mod reach;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::explore::{build_lts, BoundedLts, ExploreError, ExploreOptions};
use crate::lang::{counterexample_word, Nfa, Symbol};
use crate::model::{Configuration, Letter, RunError, SemanticsKind, System};

pub use bisim::{branching_bisimilar, k_stable, strongly_k_stable};
pub use normalize::{is_normalized, normalize_trace, Normalizer};
pub use reach::{reach_contains, reach_representation, receive_drain, RegularReachSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("topology is not an oriented ring")]
    NotRing,
    #[error("bound must be at least 1, got {0}")]
    InvalidBound(usize),
    #[error("system is not 1-synchronizable")]
    NotSynchronizable,
    #[error(transparent)]
    NotExecutable(#[from] RunError),
    #[error("normalization failed: {0}")]
    Normalization(String),
}

impl DecideError {
    /// Whether the error is a violated precondition on the input system.
    pub fn is_precondition(&self) -> bool {
        matches!(self, DecideError::NotRing | DecideError::NotSynchronizable)
    }
}

/// A shortest observation made at bound k but not at bound 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub word: Vec<Letter>,
    /// Present when the observation is a send word ending in this stable configuration.
    pub stable: Option<Configuration>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub edges: usize,
    pub k: usize,
    pub semantics: SemanticsKind,
}

impl Stats {
    pub fn of(lts: &BoundedLts) -> Self {
        Stats { states: lts.state_count(), edges: lts.edge_count(), k: lts.bound(), semantics: lts.semantics() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncVerdict {
    pub equal: bool,
    pub witness: Option<Witness>,
    /// Size of the bound-k state space.
    pub stats: Stats,
}

/// Send-word automaton of `lts`, with an extra tag symbol after every word
/// that ends in a stable configuration when `tags` is given.
fn observation_nfa(lts: &BoundedLts, tags: Option<(&BTreeMap<Configuration, Symbol>, Symbol)>) -> Nfa {
    let mut nfa = lts.send_nfa(|_| true);
    if let Some((tags, base)) = tags {
        let end = nfa.add_state(true);
        for i in lts.stable_states() {
            nfa.add_edge(i, Some(base + tags[lts.state(i)]), end);
        }
    }
    nfa
}

/// Compares the observations at bound `k` with those at bound 0.
///
/// Rendezvous observations are always included in bounded ones, so only the
/// `k ⊆ 0` direction is checked. With `language_only` only send words are
/// compared; otherwise each send word is also paired with the stable
/// configuration it reaches, if any.
pub fn k_synchronizable(
    sys: &System,
    sem: SemanticsKind,
    k: usize,
    language_only: bool,
    opts: &ExploreOptions,
) -> Result<SyncVerdict, DecideError> {
    if k == 0 {
        return Err(DecideError::InvalidBound(k));
    }
    let lts_k = build_lts(sys, sem, k, opts)?;
    let lts_0 = build_lts(sys, sem, 0, opts)?;
    Ok(compare(&lts_k, &lts_0, sys.messages().len() as Symbol, language_only))
}

/// The comparison behind [`k_synchronizable`], on prebuilt state spaces.
pub fn compare(lts_k: &BoundedLts, lts_0: &BoundedLts, letters: Symbol, language_only: bool) -> SyncVerdict {
    let mut tags: BTreeMap<Configuration, Symbol> = BTreeMap::new();
    for lts in [lts_k, lts_0] {
        for i in lts.stable_states() {
            let n = tags.len() as Symbol;
            tags.entry(lts.state(i).clone()).or_insert(n);
        }
    }
    let tagging = (!language_only).then_some((&tags, letters));
    let nfa_k = observation_nfa(lts_k, tagging);
    let nfa_0 = observation_nfa(lts_0, tagging);
    let witness = counterexample_word(&nfa_k, &nfa_0).map(|w| {
        let by_tag: BTreeMap<Symbol, &Configuration> = tags.iter().map(|(c, &t)| (t, c)).collect();
        match w.split_last() {
            Some((&last, prefix)) if last >= letters => Witness {
                word: prefix.iter().map(|&s| Letter(s)).collect(),
                stable: Some(by_tag[&(last - letters)].clone()),
            },
            _ => Witness { word: w.into_iter().map(Letter).collect(), stable: None },
        }
    });
    SyncVerdict { equal: witness.is_none(), witness, stats: Stats::of(lts_k) }
}

/// Full synchronizability of a system on an oriented ring, decided at bound 1.
pub fn ring_synchronizable(sys: &System, opts: &ExploreOptions) -> Result<SyncVerdict, DecideError> {
    if !sys.topology().is_oriented_ring() {
        return Err(DecideError::NotRing);
    }
    k_synchronizable(sys, SemanticsKind::P2pFifo, 1, false, opts)
}
