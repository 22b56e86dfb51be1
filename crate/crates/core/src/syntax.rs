//! Line-oriented text formats for systems, FIFO automata and tiling instances.
//!
//! System files:
//!
//! ```text
//! system NAME
//! peers N
//! msg LETTER SRC DST
//! peer I
//! initial STATE
//! states STATE...        # optional; fixes the state set
//! STATE !LETTER STATE
//! STATE ?LETTER STATE
//! end
//! ```
//!
//! `#` starts a comment. Peers are numbered from 1.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{validate_system, ModelError, RawPeer, RawSystem, RawTransition, System};
use crate::reduce::{FifoAutomaton, ReduceError, TilingInstance};
use crate::trace::Polarity;

/// An error with a one-based source position. Line 0 means no position is known.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

fn err(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, col, message: message.into() }
}

type Tok<'a> = (usize, &'a str);

/// Tokens of each non-empty line, with their one-based columns.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<Tok<'_>>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut start = None;
        for (j, ch) in body.char_indices().chain([(body.len(), ' ')]) {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    toks.push((s + 1, &body[s..j]));
                }
            } else if start.is_none() {
                start = Some(j);
            }
        }
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn arity(line: usize, toks: &[Tok<'_>], n: usize) -> Result<(), ParseError> {
    if toks.len() != n {
        let col = toks.get(n).map_or(toks[0].0, |t| t.0);
        return Err(err(line, col, format!("`{}` expects {} argument(s)", toks[0].1, n - 1)));
    }
    Ok(())
}

fn number(line: usize, tok: Tok<'_>) -> Result<usize, ParseError> {
    tok.1.parse().map_err(|_| err(line, tok.0, format!("expected a number, found `{}`", tok.1)))
}

#[derive(Default)]
struct Positions {
    peers: (usize, usize),
    msgs: Vec<(String, usize, usize)>,
    peer_lines: Vec<(usize, usize)>,
    /// (peer, line, col, transition) per transition line.
    transitions: Vec<(usize, usize, usize, RawTransition)>,
    initials: Vec<(usize, usize, usize, String)>,
}

/// Parses a system file and validates the result.
pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let (raw, pos) = parse_raw_system(text)?;
    validate_system(&raw).map_err(|e| locate(&pos, e))
}

fn parse_raw_system(text: &str) -> Result<(RawSystem, Positions), ParseError> {
    let mut raw = RawSystem::default();
    let mut pos = Positions::default();
    let mut saw_peers = false;
    let mut current: Option<RawPeer> = None;
    for (ln, toks) in lines(text) {
        let (col, head) = toks[0];
        if let Some(peer) = current.as_mut() {
            match head {
                "end" => {
                    arity(ln, &toks, 1)?;
                    raw.peer_defs.push(current.take().unwrap());
                }
                "initial" => {
                    arity(ln, &toks, 2)?;
                    if peer.initial.is_some() {
                        return Err(err(ln, col, "initial state given twice"));
                    }
                    peer.initial = Some(toks[1].1.to_string());
                    pos.initials.push((peer.id, ln, toks[1].0, toks[1].1.to_string()));
                }
                "states" => {
                    peer.states.get_or_insert_with(Vec::new).extend(toks[1..].iter().map(|t| t.1.to_string()));
                }
                _ => {
                    arity(ln, &toks, 3)?;
                    let (acol, action) = toks[1];
                    let (polarity, letter) = if let Some(l) = action.strip_prefix('!') {
                        (Polarity::Send, l)
                    } else if let Some(l) = action.strip_prefix('?') {
                        (Polarity::Receive, l)
                    } else {
                        return Err(err(ln, acol, format!("expected !LETTER or ?LETTER, found `{action}`")));
                    };
                    if letter.is_empty() {
                        return Err(err(ln, acol, "missing letter after polarity"));
                    }
                    let t = RawTransition {
                        from: head.to_string(),
                        polarity,
                        letter: letter.to_string(),
                        to: toks[2].1.to_string(),
                    };
                    pos.transitions.push((peer.id, ln, col, t.clone()));
                    peer.transitions.push(t);
                }
            }
            continue;
        }
        match head {
            "system" => {
                arity(ln, &toks, 2)?;
                raw.name = toks[1].1.to_string();
            }
            "peers" => {
                arity(ln, &toks, 2)?;
                raw.peers = number(ln, toks[1])?;
                saw_peers = true;
                pos.peers = (ln, toks[1].0);
            }
            "msg" => {
                arity(ln, &toks, 4)?;
                let (src, dst) = (number(ln, toks[2])?, number(ln, toks[3])?);
                raw.messages.push(crate::model::RawMessage { name: toks[1].1.to_string(), src, dst });
                pos.msgs.push((toks[1].1.to_string(), ln, toks[1].0));
            }
            "peer" => {
                arity(ln, &toks, 2)?;
                let id = number(ln, toks[1])?;
                pos.peer_lines.push((ln, toks[1].0));
                current = Some(RawPeer { id, ..Default::default() });
            }
            other => return Err(err(ln, col, format!("unexpected `{other}`"))),
        }
    }
    if current.is_some() {
        return Err(err(text.lines().count(), 1, "missing `end` for the last peer"));
    }
    if !saw_peers {
        return Err(err(1, 1, "missing `peers` directive"));
    }
    Ok((raw, pos))
}

fn locate(pos: &Positions, e: ModelError) -> ParseError {
    let msg_line = |name: &str, nth: usize| pos.msgs.iter().filter(|(n, _, _)| n == name).nth(nth);
    let at = |p: Option<(usize, usize)>| p.unwrap_or((0, 0));
    let (line, col) = match &e {
        ModelError::DuplicateLetter { letter } => at(msg_line(letter, 1).map(|m| (m.1, m.2))),
        ModelError::SelfLoopChannel { letter, .. } | ModelError::PeerOutOfRange { letter, .. } => {
            at(msg_line(letter, 0).map(|m| (m.1, m.2)))
        }
        ModelError::UnknownLetter { letter } => {
            at(pos.transitions.iter().find(|t| &t.3.letter == letter).map(|t| (t.1, t.2)))
        }
        ModelError::ForeignAction { peer, action } => at(pos
            .transitions
            .iter()
            .find(|t| t.0 == *peer && format!("{}{}", t.3.polarity.sigil(), t.3.letter) == *action)
            .map(|t| (t.1, t.2))),
        ModelError::UnknownState { peer, state } => {
            at(pos.initials.iter().find(|i| i.0 == *peer && &i.3 == state).map(|i| (i.1, i.2)).or_else(|| {
                pos.transitions
                    .iter()
                    .find(|t| t.0 == *peer && (&t.3.from == state || &t.3.to == state))
                    .map(|t| (t.1, t.2))
            }))
        }
        ModelError::MissingInitial { peer } | ModelError::DuplicatePeer { peer } => {
            // The last `peer` line for this id is the offending one.
            let _ = peer;
            at(pos.peer_lines.last().copied())
        }
        ModelError::MissingPeer { .. } | ModelError::BadPeerId { .. } | ModelError::NoPeers => pos.peers,
        ModelError::NotEnabled { .. } => (0, 0),
    };
    err(line, col, e.to_string())
}

/// Canonical text for a system; reparses to an equal system.
pub fn write_system(sys: &System) -> String {
    let ms = sys.messages();
    let mut s = String::new();
    let _ = writeln!(s, "system {}", if sys.name().is_empty() { "unnamed" } else { sys.name() });
    let _ = writeln!(s, "peers {}", sys.peer_count());
    for l in ms.letters() {
        let _ = writeln!(s, "msg {} {} {}", ms.name(l), ms.src(l) + 1, ms.dst(l) + 1);
    }
    for (i, p) in sys.peers().iter().enumerate() {
        let _ = writeln!(s, "\npeer {}", i + 1);
        let _ = writeln!(s, "initial {}", p.state_name(p.initial()));
        let _ = writeln!(s, "states {}", p.state_names().join(" "));
        for t in p.transitions() {
            let _ = writeln!(s, "{} {} {}", p.state_name(t.from), t.action.display(ms), p.state_name(t.to));
        }
        s.push_str("end\n");
    }
    s
}

/// FIFO automaton files:
///
/// ```text
/// fifo NAME
/// alphabet LETTER...
/// initial STATE
/// states STATE...
/// STATE !LETTER STATE
/// ```
///
/// The optional `states` line declares states that may have no transitions.
pub fn parse_fifo(text: &str) -> Result<FifoAutomaton, ParseError> {
    let mut name = String::from("fifo");
    let mut alphabet: Option<Vec<String>> = None;
    let mut a: Option<FifoAutomaton> = None;
    for (ln, toks) in lines(text) {
        let (col, head) = toks[0];
        match head {
            "fifo" => {
                arity(ln, &toks, 2)?;
                name = toks[1].1.to_string();
            }
            "alphabet" => {
                let letters: Vec<String> = toks[1..].iter().map(|t| t.1.to_string()).collect();
                let distinct: BTreeSet<_> = letters.iter().collect();
                if distinct.len() != letters.len() {
                    return Err(err(ln, col, "duplicate letter in alphabet"));
                }
                alphabet = Some(letters);
            }
            "initial" => {
                arity(ln, &toks, 2)?;
                let letters = alphabet.as_ref().ok_or_else(|| err(ln, col, "`alphabet` must come before `initial`"))?;
                let refs: Vec<&str> = letters.iter().map(String::as_str).collect();
                a = Some(FifoAutomaton::new(&name, &refs, toks[1].1));
            }
            "states" => {
                let auto = a.as_mut().ok_or_else(|| err(ln, col, "`initial` must come before `states`"))?;
                for &(_, st) in &toks[1..] {
                    auto.add_state(st);
                }
            }
            _ => {
                arity(ln, &toks, 3)?;
                let auto = a.as_mut().ok_or_else(|| err(ln, col, "`initial` must come before transitions"))?;
                let (acol, action) = toks[1];
                let (pol, letter) = if let Some(l) = action.strip_prefix('!') {
                    (Polarity::Send, l)
                } else if let Some(l) = action.strip_prefix('?') {
                    (Polarity::Receive, l)
                } else {
                    return Err(err(ln, acol, format!("expected !LETTER or ?LETTER, found `{action}`")));
                };
                auto.add(head, pol, letter, toks[2].1).map_err(|e| err(ln, acol, e.to_string()))?;
            }
        }
    }
    a.ok_or_else(|| err(0, 0, "missing `initial` directive"))
}

pub fn write_fifo(a: &FifoAutomaton) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fifo {}", a.name);
    let _ = writeln!(s, "alphabet {}", a.alphabet().join(" "));
    let _ = writeln!(s, "initial {}", a.states()[a.initial()]);
    let _ = writeln!(s, "states {}", a.states().join(" "));
    for &(f, act, t) in a.transitions() {
        let _ = writeln!(s, "{} {} {}", a.states()[f], a.render_action(act), a.states()[t]);
    }
    s
}

/// Tiling files:
///
/// ```text
/// tiles TILE...
/// initial TILE
/// final TILE
/// blank TILE
/// h LEFT RIGHT
/// v BELOW ABOVE
/// ```
pub fn parse_tiling(text: &str) -> Result<TilingInstance, ParseError> {
    let mut tiles = None;
    let (mut initial, mut last, mut blank) = (None, None, None);
    let mut horizontal = BTreeSet::new();
    let mut vertical = BTreeSet::new();
    for (ln, toks) in lines(text) {
        let (col, head) = toks[0];
        let one = |slot: &mut Option<String>| -> Result<(), ParseError> {
            arity(ln, &toks, 2)?;
            *slot = Some(toks[1].1.to_string());
            Ok(())
        };
        match head {
            "tiles" => tiles = Some(toks[1..].iter().map(|t| t.1.to_string()).collect::<Vec<_>>()),
            "initial" => one(&mut initial)?,
            "final" => one(&mut last)?,
            "blank" => one(&mut blank)?,
            "h" | "v" => {
                arity(ln, &toks, 3)?;
                let pair = (toks[1].1.to_string(), toks[2].1.to_string());
                if head == "h" {
                    horizontal.insert(pair)
                } else {
                    vertical.insert(pair)
                };
            }
            other => return Err(err(ln, col, format!("unexpected `{other}`"))),
        }
    }
    let missing = |what: &str| err(0, 0, format!("missing `{what}` directive"));
    let t = TilingInstance {
        tiles: tiles.ok_or_else(|| missing("tiles"))?,
        initial: initial.ok_or_else(|| missing("initial"))?,
        last: last.ok_or_else(|| missing("final"))?,
        blank: blank.ok_or_else(|| missing("blank"))?,
        horizontal,
        vertical,
    };
    t.validate().map_err(|e: ReduceError| err(0, 0, e.to_string()))?;
    Ok(t)
}

pub fn write_tiling(t: &TilingInstance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tiles {}", t.tiles.join(" "));
    let _ = writeln!(s, "initial {}\nfinal {}\nblank {}", t.initial, t.last, t.blank);
    for (x, y) in &t.horizontal {
        let _ = writeln!(s, "h {x} {y}");
    }
    for (x, y) in &t.vertical {
        let _ = writeln!(s, "v {x} {y}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::builtins;

    const EX22: &str = "\
system example22
peers 3
msg a 1 2
msg b 1 3
msg c 3 2
msg d 2 1
peer 1
initial q0
q0 !a q1
q1 !a q2
q2 !b q3
end
peer 2   # branches on its first receive
initial q0
q0 ?a q1
q1 ?a q2
q2 ?c q3
q0 ?c q4
q4 !d q5
end
peer 3
initial q0
q0 ?b q1
q1 !c q2
end
";

    #[test]
    fn parses_example22() {
        assert_eq!(parse_system(EX22).unwrap(), builtins::example22());
    }

    #[test]
    fn self_loop_has_location() {
        let e = parse_system("peers 2\nmsg a 1 1\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 5));
        assert!(e.to_string().contains("self-loop channel"));
    }

    #[test]
    fn syntax_errors_have_location() {
        let e = parse_system("peers 2\nmsg a 1 2\npeer 1\ninitial q\nq a q\nend\n").unwrap_err();
        assert_eq!((e.line, e.col), (5, 3));
        let e = parse_system("peers 2\nbogus\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_system("peers 2\nmsg a 1 2\npeer 1\ninitial q\n").unwrap_err();
        assert!(e.message.contains("end"));
    }

    #[test]
    fn foreign_action_has_location() {
        let text = "peers 2\nmsg a 1 2\npeer 1\ninitial q\nend\npeer 2\ninitial r\nr !a r\nend\n";
        let e = parse_system(text).unwrap_err();
        assert_eq!(e.line, 8);
        assert!(e.message.contains("foreign action"));
    }

    #[test]
    fn unknown_state_with_states_directive() {
        let text = "peers 2\nmsg a 1 2\npeer 1\ninitial q\nstates q\nq !a r\nend\npeer 2\ninitial r\nend\n";
        let e = parse_system(text).unwrap_err();
        assert_eq!(e.line, 6);
        assert!(e.message.contains("unknown state"));
    }

    #[test]
    fn round_trip_all_builtins() {
        for (name, sys) in builtins::systems() {
            let text = write_system(&sys);
            assert_eq!(parse_system(&text).unwrap(), sys, "{name}");
        }
    }

    #[test]
    fn fifo_and_tiling_round_trip() {
        let a = builtins::example33();
        assert_eq!(parse_fifo(&write_fifo(&a)).unwrap(), a);
        let t = TilingInstance::singleton();
        assert_eq!(parse_tiling(&write_tiling(&t)).unwrap(), t);
    }
}
