//! Named example systems and FIFO automata, with the verdicts expected of them.

use crate::model::{validate_system, RawPeer, RawSystem, System};
use crate::reduce::{
    fifo_to_system, fifo_to_system_merged, fifo_to_system_prime, tiling_to_fifo, FifoAutomaton, TilingInstance,
};
use crate::trace::Polarity;

/// What a registry entry holds.
#[derive(Clone, Copy)]
pub enum BuiltinKind {
    System(fn() -> System),
    Fifo(fn() -> FifoAutomaton),
    /// Known by name only; the machines are not available.
    Placeholder,
}

/// Verdicts a built-in is known to produce. `None` means not applicable or not known.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Expected {
    /// Full 1-synchronizability under point-to-point FIFO.
    pub one_sync: Option<bool>,
    /// Synchronizability, for oriented rings only.
    pub ring_sync: Option<bool>,
}

#[derive(Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub kind: BuiltinKind,
    pub expected: Expected,
}

impl Builtin {
    pub fn system(&self) -> Option<System> {
        match self.kind {
            BuiltinKind::System(f) => Some(f()),
            _ => None,
        }
    }

    pub fn fifo(&self) -> Option<FifoAutomaton> {
        match self.kind {
            BuiltinKind::Fifo(f) => Some(f()),
            _ => None,
        }
    }
}

const fn exp(one_sync: Option<bool>, ring_sync: Option<bool>) -> Expected {
    Expected { one_sync, ring_sync }
}

pub const REGISTRY: &[Builtin] = &[
    Builtin {
        name: "example22",
        summary: "three peers; 1-synchronizable but not 2-synchronizable",
        kind: BuiltinKind::System(example22),
        expected: exp(Some(true), None),
    },
    Builtin {
        name: "intro-sync",
        summary: "P = !a.!b, Q = ?a.?b",
        kind: BuiltinKind::System(intro_sync),
        expected: exp(Some(true), None),
    },
    Builtin {
        name: "intro-unsync",
        summary: "P = !a.!b.!c, Q = ?a.?b; c is never received",
        kind: BuiltinKind::System(intro_unsync),
        expected: exp(Some(false), None),
    },
    Builtin {
        name: "send-idle",
        summary: "P1 = !a, P2 idle",
        kind: BuiltinKind::System(send_idle),
        expected: exp(Some(false), None),
    },
    Builtin {
        name: "send-twice",
        summary: "P1 = !a.!a, P2 idle",
        kind: BuiltinKind::System(send_twice),
        expected: exp(Some(false), None),
    },
    Builtin {
        name: "genest-sync",
        summary: "P = !a.!a || ?b.?b, Q = ?a.?a || !b.!b as product automata",
        kind: BuiltinKind::System(genest_sync),
        expected: exp(Some(true), Some(true)),
    },
    Builtin {
        name: "ring2-sync",
        summary: "ring of two: P1 = !a.?b, P2 = ?a.!b",
        kind: BuiltinKind::System(ring2_sync),
        expected: exp(Some(true), Some(true)),
    },
    Builtin {
        name: "ring2-unsync",
        summary: "ring of two: P1 = !a.!a, P2 = ?a",
        kind: BuiltinKind::System(ring2_unsync),
        expected: exp(Some(false), Some(false)),
    },
    Builtin {
        name: "ring3-sync",
        summary: "ring of three passing one token around",
        kind: BuiltinKind::System(ring3_sync),
        expected: exp(Some(true), Some(true)),
    },
    Builtin {
        name: "ring3-unsync",
        summary: "ring of three where peer 1 may send before peer 2",
        kind: BuiltinKind::System(ring3_unsync),
        expected: exp(Some(false), Some(false)),
    },
    Builtin {
        name: "ring-normalize",
        summary: "ring of two: P1 = !a.!c.?b, P2 = ?a.?c.!b",
        kind: BuiltinKind::System(ring_normalize),
        expected: exp(Some(true), Some(true)),
    },
    Builtin {
        name: "ring2-exchange",
        summary: "ring of two: each peer sends twice and accepts input at any time",
        kind: BuiltinKind::System(ring2_exchange),
        expected: exp(Some(true), Some(true)),
    },
    Builtin {
        name: "ring3-exchange",
        summary: "ring of three: each peer sends once and accepts input at any time",
        kind: BuiltinKind::System(ring3_exchange),
        expected: exp(Some(true), Some(true)),
    },
    Builtin {
        name: "example33",
        summary: "FIFO automaton over {a, m} that can dequeue m",
        kind: BuiltinKind::Fifo(example33),
        expected: exp(None, None),
    },
    Builtin {
        name: "example33-no-recv-m",
        summary: "example33 without its ?m transition",
        kind: BuiltinKind::Fifo(example33_no_recv_m),
        expected: exp(None, None),
    },
    Builtin {
        name: "example33-s",
        summary: "three-peer encoding of example33",
        kind: BuiltinKind::System(example33_s),
        expected: exp(Some(false), None),
    },
    Builtin {
        name: "example33-s-prime",
        summary: "encoding of example33 with the order-ignoring peer 2, m = m",
        kind: BuiltinKind::System(example33_s_prime),
        expected: exp(Some(true), None),
    },
    Builtin {
        name: "example33-s-merged",
        summary: "encoding of example33 with both peer 2 variants, m = m",
        kind: BuiltinKind::System(example33_s_merged),
        expected: exp(Some(false), None),
    },
    Builtin {
        name: "example33-no-recv-m-s-merged",
        summary: "merged encoding of example33-no-recv-m, m = m",
        kind: BuiltinKind::System(example33_no_recv_m_s_merged),
        expected: exp(Some(true), None),
    },
    Builtin {
        name: "tiling-singleton",
        summary: "FIFO automaton of the one-tile tiling instance",
        kind: BuiltinKind::Fifo(tiling_singleton),
        expected: exp(None, None),
    },
    Builtin {
        name: "mailbox-counterexample",
        summary: "placeholder: the mailbox counterexample machines are not available",
        kind: BuiltinKind::Placeholder,
        expected: exp(None, None),
    },
];

pub fn lookup(name: &str) -> Option<&'static Builtin> {
    REGISTRY.iter().find(|b| b.name == name)
}

/// All built-in systems, by name.
pub fn systems() -> Vec<(&'static str, System)> {
    REGISTRY.iter().filter_map(|b| b.system().map(|s| (b.name, s))).collect()
}

fn build(raw: &RawSystem) -> System {
    validate_system(raw).expect("built-in system is valid")
}

/// Peer 2 branches on its first receive; the `c` branch answers with `d`.
pub fn example22() -> System {
    let mut raw = RawSystem::new("example22", 3);
    raw.msg("a", 1, 2).msg("b", 1, 3).msg("c", 3, 2).msg("d", 2, 1);
    let mut p1 = RawPeer::new(1, "q0");
    p1.send("q0", "a", "q1").send("q1", "a", "q2").send("q2", "b", "q3");
    let mut p2 = RawPeer::new(2, "q0");
    p2.recv("q0", "a", "q1").recv("q1", "a", "q2").recv("q2", "c", "q3");
    p2.recv("q0", "c", "q4").send("q4", "d", "q5");
    let mut p3 = RawPeer::new(3, "q0");
    p3.recv("q0", "b", "q1").send("q1", "c", "q2");
    raw.peer(p1).peer(p2).peer(p3);
    build(&raw)
}

fn chain(id: usize, steps: &[(Polarity, &str)]) -> RawPeer {
    let mut p = RawPeer::new(id, "q0");
    for (i, &(pol, l)) in steps.iter().enumerate() {
        let (from, to) = (format!("q{i}"), format!("q{}", i + 1));
        match pol {
            Polarity::Send => p.send(&from, l, &to),
            Polarity::Receive => p.recv(&from, l, &to),
        };
    }
    p
}

use Polarity::{Receive as R, Send as S};

fn two_peer(name: &str, msgs: &[(&str, usize, usize)], p1: &[(Polarity, &str)], p2: &[(Polarity, &str)]) -> System {
    let mut raw = RawSystem::new(name, 2);
    for &(l, s, d) in msgs {
        raw.msg(l, s, d);
    }
    raw.peer(chain(1, p1)).peer(chain(2, p2));
    build(&raw)
}

pub fn intro_sync() -> System {
    two_peer("intro-sync", &[("a", 1, 2), ("b", 1, 2)], &[(S, "a"), (S, "b")], &[(R, "a"), (R, "b")])
}

pub fn intro_unsync() -> System {
    two_peer(
        "intro-unsync",
        &[("a", 1, 2), ("b", 1, 2), ("c", 1, 2)],
        &[(S, "a"), (S, "b"), (S, "c")],
        &[(R, "a"), (R, "b")],
    )
}

pub fn send_idle() -> System {
    two_peer("send-idle", &[("a", 1, 2)], &[(S, "a")], &[])
}

pub fn send_twice() -> System {
    two_peer("send-twice", &[("a", 1, 2)], &[(S, "a"), (S, "a")], &[])
}

/// Interleaving product of a two-step sender and a two-step receiver, as one peer.
fn grid(id: usize, send: &str, recv: &str) -> RawPeer {
    let name = |i: usize, j: usize| format!("q{i}{j}");
    let mut p = RawPeer::new(id, "q00");
    for i in 0..3 {
        for j in 0..3 {
            if i < 2 {
                p.send(&name(i, j), send, &name(i + 1, j));
            }
            if j < 2 {
                p.recv(&name(i, j), recv, &name(i, j + 1));
            }
        }
    }
    p
}

pub fn genest_sync() -> System {
    let mut raw = RawSystem::new("genest-sync", 2);
    raw.msg("a", 1, 2).msg("b", 2, 1);
    raw.peer(grid(1, "a", "b")).peer(grid(2, "b", "a"));
    build(&raw)
}

pub fn ring2_sync() -> System {
    two_peer("ring2-sync", &[("a", 1, 2), ("b", 2, 1)], &[(S, "a"), (R, "b")], &[(R, "a"), (S, "b")])
}

pub fn ring2_unsync() -> System {
    two_peer("ring2-unsync", &[("a", 1, 2), ("b", 2, 1)], &[(S, "a"), (S, "a")], &[(R, "a")])
}

pub fn ring_normalize() -> System {
    two_peer(
        "ring-normalize",
        &[("a", 1, 2), ("c", 1, 2), ("b", 2, 1)],
        &[(S, "a"), (S, "c"), (R, "b")],
        &[(R, "a"), (R, "c"), (S, "b")],
    )
}

fn ring3(name: &str, p1: &[(Polarity, &str)], p2: &[(Polarity, &str)], p3: &[(Polarity, &str)]) -> System {
    let mut raw = RawSystem::new(name, 3);
    raw.msg("a", 1, 2).msg("b", 2, 3).msg("c", 3, 1);
    raw.peer(chain(1, p1)).peer(chain(2, p2)).peer(chain(3, p3));
    build(&raw)
}

pub fn ring3_sync() -> System {
    ring3("ring3-sync", &[(S, "a"), (R, "c")], &[(R, "a"), (S, "b")], &[(R, "b"), (S, "c")])
}

pub fn ring3_unsync() -> System {
    ring3("ring3-unsync", &[(S, "a"), (R, "c")], &[(S, "b"), (R, "a")], &[(R, "b"), (S, "c")])
}

/// A chain of `sends` sends of `out`, with a receive self-loop on `input` at every state.
fn eager(id: usize, out: &str, sends: usize, input: &str) -> RawPeer {
    let mut p = RawPeer::new(id, "q0");
    for i in 0..=sends {
        let q = format!("q{i}");
        if i < sends {
            p.send(&q, out, &format!("q{}", i + 1));
        }
        p.recv(&q, input, &q);
    }
    p
}

pub fn ring2_exchange() -> System {
    let mut raw = RawSystem::new("ring2-exchange", 2);
    raw.msg("a", 1, 2).msg("b", 2, 1);
    raw.peer(eager(1, "a", 2, "b")).peer(eager(2, "b", 2, "a"));
    build(&raw)
}

pub fn ring3_exchange() -> System {
    let mut raw = RawSystem::new("ring3-exchange", 3);
    raw.msg("a", 1, 2).msg("b", 2, 3).msg("c", 3, 1);
    raw.peer(eager(1, "a", 1, "c")).peer(eager(2, "b", 1, "a")).peer(eager(3, "c", 1, "b"));
    build(&raw)
}

pub fn example33() -> FifoAutomaton {
    let mut a = FifoAutomaton::new("example33", &["a", "m"], "q0");
    a.send("q0", "a", "q0").unwrap();
    a.send("q0", "m", "q1").unwrap();
    a.recv("q1", "a", "q0").unwrap();
    a.recv("q1", "m", "q0").unwrap();
    a
}

pub fn example33_no_recv_m() -> FifoAutomaton {
    let mut a = example33().without(&[("q1", Polarity::Receive, "m", "q0")]);
    a.name = "example33-no-recv-m".into();
    a
}

pub fn example33_s() -> System {
    fifo_to_system(&example33()).expect("valid encoding")
}

pub fn example33_s_prime() -> System {
    fifo_to_system_prime(&example33(), "m").expect("valid encoding")
}

pub fn example33_s_merged() -> System {
    fifo_to_system_merged(&example33(), "m").expect("valid encoding")
}

pub fn example33_no_recv_m_s_merged() -> System {
    fifo_to_system_merged(&example33_no_recv_m(), "m").expect("valid encoding")
}

pub fn tiling_singleton() -> FifoAutomaton {
    tiling_to_fifo(&TilingInstance::singleton()).expect("valid instance")
}
