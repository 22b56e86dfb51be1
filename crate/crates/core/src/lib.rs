//! Systems of communicating finite state machines.
//!
//! Peers exchange messages over FIFO channels (one queue per ordered pair of
//! peers, or one mailbox per receiver) or over unordered bags. The crate
//! explores the bounded state spaces of such systems and decides properties
//! that compare asynchronous behaviour against rendezvous behaviour:
//! k-synchronizability for a fixed bound, synchronizability on oriented
//! rings, regular reachability sets, stability under branching bisimulation
//! and existential boundedness of individual traces.
//!
//! The [`reduce`] module builds the three-peer encodings of FIFO automata
//! (and tiling instances) that make synchronizability undecidable in
//! general, so those constructions can be executed and checked on small
//! instances.
//!
//! Peer identifiers are zero-based in the API. The text formats in
//! [`syntax`] and all printed output use one-based peer numbers.

pub mod decide;
pub mod explore;
pub mod lang;
pub mod model;
mod par;
pub mod reduce;
pub mod syntax;
pub mod trace;
pub mod verify;

pub use decide::{SyncVerdict, Witness};
pub use explore::{BoundedLts, ExploreOptions, Label};
pub use lang::Nfa;
pub use model::{Configuration, Letter, MessageSet, PeerId, SemanticsKind, StateId, System};
pub use par::available as parallel_available;
pub use trace::{Action, Polarity, Trace};
