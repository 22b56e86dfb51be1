//! Executable checks of the structural properties behind the decision
//! procedures and the reduction.
//!
//! Every check explores a bounded slice of behaviour and reports whether the
//! property held on each case it examined, or the first case where it failed.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decide::{
    is_normalized, k_synchronizable, reach_contains, reach_representation, receive_drain, ring_synchronizable,
    DecideError, Normalizer,
};
use crate::explore::{build_lts, ExploreError, ExploreOptions};
use crate::model::{Configuration, Letter, MessageSet, SemanticsKind, System};
use crate::par;
use crate::reduce::{
    builtins, encoded_letter, fifo_to_system, fifo_to_system_merged, fifo_to_system_prime, morphism_h,
    morphism_h_doubleprime, morphism_h_prime, tiling_to_fifo, FifoAction, FifoAutomaton, ReduceError, TilingInstance,
};
use crate::trace::{shuffles, Action, Polarity, Trace};

const P2P: SemanticsKind = SemanticsKind::P2pFifo;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub name: String,
    pub holds: bool,
    /// Number of individual cases examined.
    pub cases: usize,
    /// The first failing case, or a summary of what was covered.
    pub detail: String,
}

struct Tally {
    name: String,
    cases: usize,
    failure: Option<String>,
}

impl Tally {
    fn new(name: impl Into<String>) -> Self {
        Tally { name: name.into(), cases: 0, failure: None }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    fn absorb(&mut self, outcomes: Vec<(usize, Option<String>)>) {
        for (n, f) in outcomes {
            self.cases += n;
            if self.failure.is_none() {
                self.failure = f;
            }
        }
    }

    fn finish(self, summary: impl FnOnce() -> String) -> PropertyReport {
        PropertyReport {
            name: self.name,
            holds: self.failure.is_none(),
            cases: self.cases,
            detail: self.failure.unwrap_or_else(summary),
        }
    }
}

fn prefixes_into(out: &mut BTreeSet<Trace>, t: &Trace, max: usize, step: usize) {
    for len in (0..=t.len().min(max)).step_by(step) {
        out.insert(t.prefix(len));
    }
}

fn first_difference(ms: &MessageSet, lhs: &BTreeSet<Trace>, rhs: &BTreeSet<Trace>) -> Option<String> {
    let shortest = |s: BTreeSet<&Trace>| s.into_iter().min_by_key(|t| (t.len(), (*t).clone())).cloned();
    if let Some(t) = shortest(lhs.difference(rhs).collect()) {
        return Some(format!("explored but not predicted: {}", t.display(ms)));
    }
    shortest(rhs.difference(lhs).collect()).map(|t| format!("predicted but not explored: {}", t.display(ms)))
}

/// Bounded traces of the encoding system are exactly the prefixes of the
/// images of the automaton's bounded traces, plus the blocked dequeue
/// orders, compared on all traces of at most `depth` actions.
pub fn fifo_encoding(
    a: &FifoAutomaton,
    k: usize,
    depth: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let sys = fifo_to_system(a)?;
    let ms = sys.messages();
    let explored = build_lts(&sys, P2P, k, opts)?.traces_up_to(depth);
    let mut predicted = BTreeSet::new();
    for (t, configs) in a.bounded_runs(k, depth) {
        let image = morphism_h(a, &sys, &t);
        prefixes_into(&mut predicted, &image, depth, 1);
        for &(f, act, _) in a.transitions() {
            if act.polarity != Polarity::Receive || !configs.iter().any(|c| c.0 == f) {
                continue;
            }
            let mut blocked = image.clone();
            for (i, j) in [(1, 3), (3, 2)] {
                let l = encoded_letter(a, &sys, act.letter, i, j).expect("encoding letter");
                blocked.push(Action::send(l));
                blocked.push(Action::receive(l));
            }
            prefixes_into(&mut predicted, &blocked, depth, 1);
        }
    }
    let mut tally = Tally::new(format!("fifo-encoding[{} k={k}]", a.name));
    tally.cases = explored.len().max(predicted.len());
    tally.failure = first_difference(ms, &explored, &predicted);
    Ok(tally.finish(|| format!("{} traces of at most {depth} actions agree", explored.len())))
}

/// Rendezvous traces of the order-ignoring variant are the synchronous
/// prefixes of images of the restricted control language.
pub fn variant_sync_traces(
    a: &FifoAutomaton,
    m: &str,
    depth: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let sys = fifo_to_system_prime(a, m)?;
    let special = a.letter(m).ok_or_else(|| ReduceError::UnknownLetter(m.to_string()))?;
    let explored = build_lts(&sys, P2P, 0, opts)?.traces_up_to(depth);
    let mut predicted = BTreeSet::new();
    for w in a.lm_language(special).words_up_to(depth) {
        let t: Vec<FifoAction> = w.iter().map(|&s| FifoAction::from_symbol(s)).collect();
        prefixes_into(&mut predicted, &morphism_h_prime(a, &sys, special, &t), depth, 2);
    }
    let mut tally = Tally::new(format!("variant-sync-traces[{} m={m}]", a.name));
    tally.cases = explored.len().max(predicted.len());
    tally.failure = first_difference(sys.messages(), &explored, &predicted);
    Ok(tally.finish(|| format!("{} synchronous traces of at most {depth} actions agree", explored.len())))
}

/// The order-ignoring variant is k-synchronizable for every listed bound.
pub fn variant_synchronizable(
    a: &FifoAutomaton,
    m: &str,
    bounds: &[usize],
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let sys = fifo_to_system_prime(a, m)?;
    let mut tally = Tally::new(format!("variant-synchronizable[{} m={m}]", a.name));
    for &k in bounds {
        let v = k_synchronizable(&sys, P2P, k, false, opts)?;
        tally.check(v.equal, || {
            let w = v.witness.as_ref().map(|w| sys.messages().format_word(&w.word)).unwrap_or_default();
            format!("not {k}-synchronizable, witness {w}")
        });
    }
    Ok(tally.finish(|| format!("synchronizable at bounds {bounds:?}")))
}

/// The merged system's bounded send language differs from its rendezvous
/// one exactly when the automaton can dequeue `m` within the bound.
pub fn reception_reduction(
    a: &FifoAutomaton,
    m: &str,
    k: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let sys = fifo_to_system_merged(a, m)?;
    let special = a.letter(m).ok_or_else(|| ReduceError::UnknownLetter(m.to_string()))?;
    let reception = a.trace_ending_in_receive(special, k);
    let v = k_synchronizable(&sys, P2P, k, true, opts)?;
    let mut tally = Tally::new(format!("reception-reduction[{} m={m} k={k}]", a.name));
    tally.check(reception.is_some() != v.equal, || {
        format!("?{m} reachable: {}, send languages equal: {}", reception.is_some(), v.equal)
    });
    Ok(tally.finish(|| match (&reception, &v.witness) {
        (Some(t), Some(w)) => format!(
            "?{m} reachable by {}; send-language witness {}",
            a.render_trace(t),
            sys.messages().format_word(&w.word)
        ),
        _ => format!("?{m} unreachable; send languages equal"),
    }))
}

/// Turning every send on channel 1→2 into a rendezvous maps bounded traces
/// of the variant to executable traces reaching the configuration obtained
/// by draining channel 1→2. Images that are synchronous must be rendezvous
/// traces; others still end with sends pending on the remaining channels.
pub fn receive_insertion(
    a: &FifoAutomaton,
    m: &str,
    k: usize,
    depth: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let sys = fifo_to_system_prime(a, m)?;
    let ms = sys.messages();
    let sync = build_lts(&sys, P2P, 0, opts)?;
    let traces: Vec<Trace> = build_lts(&sys, P2P, k, opts)?.traces_up_to(depth).into_iter().collect();
    let mut tally = Tally::new(format!("receive-insertion[{} m={m} k={k}]", a.name));
    let outcomes = par::map(&traces, opts.parallel, |t| {
        let image = morphism_h_doubleprime(&sys, t);
        let mut drained = t.clone();
        for l in t.buffer_after(ms, 0, 1).unwrap_or_default() {
            drained.push(Action::receive(l));
        }
        let same = match (sys.run_all(P2P, &drained), sys.run_all(P2P, &image)) {
            (Ok(x), Ok(y)) => !x.is_disjoint(&y),
            _ => false,
        };
        let ok = same && (!image.is_synchronous() || sync.accepts_trace(&image));
        (1, (!ok).then(|| format!("trace {} maps to {}", t.display(ms), image.display(ms))))
    });
    tally.absorb(outcomes);
    Ok(tally.finish(|| format!("{} traces of at most {depth} actions", traces.len())))
}

fn reached(sys: &System, t: &Trace) -> Option<BTreeSet<Configuration>> {
    sys.run_all(P2P, t).ok()
}

fn sends(letters: &[Letter]) -> Trace {
    letters.iter().map(|&l| Action::send(l)).collect()
}

fn rendezvous(letters: &[Letter]) -> Trace {
    letters.iter().flat_map(|&l| [Action::send(l), Action::receive(l)]).collect()
}

/// All traces in `family` are executable after `prefix` and pairwise reach a
/// common configuration.
fn confluent(sys: &System, prefix: &Trace, family: &BTreeSet<Trace>) -> Result<(), String> {
    let ms = sys.messages();
    let mut ends = Vec::new();
    for s in family {
        match reached(sys, &prefix.concat(s)) {
            Some(r) => ends.push((s, r)),
            None => return Err(format!("{} · {} is not executable", prefix.display(ms), s.display(ms))),
        }
    }
    for (i, (s1, r1)) in ends.iter().enumerate() {
        for (s2, r2) in &ends[i + 1..] {
            if r1.is_disjoint(r2) {
                return Err(format!(
                    "{} · {} and {} · {} reach different configurations",
                    prefix.display(ms),
                    s1.display(ms),
                    prefix.display(ms),
                    s2.display(ms)
                ));
            }
        }
    }
    Ok(())
}

/// Send sequences of length `1..=max_len` executable right after `prefix`.
fn send_sequences(sys: &System, prefix: &Trace, max_len: usize, same_source: bool) -> Vec<Vec<Letter>> {
    let ms = sys.messages();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Letter>> = vec![Vec::new()];
    while let Some(seq) = stack.pop() {
        if seq.len() == max_len {
            continue;
        }
        for l in ms.letters() {
            if same_source && seq.first().is_some_and(|&f| ms.src(f) != ms.src(l)) {
                continue;
            }
            let mut next = seq.clone();
            next.push(l);
            if reached(sys, &prefix.concat(&sends(&next))).is_some() {
                out.push(next.clone());
                stack.push(next);
            }
        }
    }
    out.sort();
    out
}

fn sync_prefixes(sys: &System, depth: usize, opts: &ExploreOptions) -> Result<Vec<Trace>, VerifyError> {
    Ok(build_lts(sys, P2P, 0, opts)?.traces_up_to(depth).into_iter().collect())
}

fn sources(ms: &MessageSet, seq: &[Letter]) -> BTreeSet<usize> {
    seq.iter().map(|&l| ms.src(l)).collect()
}

/// Sends from different peers commute after any rendezvous prefix: all six
/// interleavings of `!a ?a` and `!b ?b` reach a common configuration.
pub fn send_diamond(sys: &System, depth: usize, opts: &ExploreOptions) -> Result<PropertyReport, VerifyError> {
    diamond(sys, depth, 1, format!("send-diamond[{}]", sys.name()), opts)
}

/// As [`send_diamond`] for send sequences of up to `max_len` letters on each
/// side, interleaving their rendezvous forms.
pub fn general_diamond(
    sys: &System,
    depth: usize,
    max_len: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    diamond(sys, depth, max_len, format!("general-diamond[{}]", sys.name()), opts)
}

fn diamond(
    sys: &System,
    depth: usize,
    max_len: usize,
    name: String,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let ms = sys.messages();
    let prefixes = sync_prefixes(sys, depth, opts)?;
    let outcomes = par::map(&prefixes, opts.parallel, |tau| {
        let seqs = send_sequences(sys, tau, max_len, false);
        let mut n = 0;
        for (i, u) in seqs.iter().enumerate() {
            for v in &seqs[i + 1..] {
                if !sources(ms, u).is_disjoint(&sources(ms, v)) {
                    continue;
                }
                n += 1;
                if let Err(e) = confluent(sys, tau, &shuffles(&rendezvous(u), &rendezvous(v))) {
                    return (n, Some(e));
                }
            }
        }
        (n, None)
    });
    let mut tally = Tally::new(name);
    tally.absorb(outcomes);
    let count = prefixes.len();
    Ok(tally.finish(|| format!("{count} rendezvous prefixes of at most {depth} actions")))
}

/// For letters with different sources, every interleaving of `!a ?a` with
/// `!b ?b` looks to each peer like one of the two rendezvous orders.
pub fn shuffle_projection(ms: &MessageSet) -> PropertyReport {
    let mut tally = Tally::new("shuffle-projection");
    let letters: Vec<Letter> = ms.letters().collect();
    for &a in &letters {
        for &b in &letters {
            if ms.src(a) == ms.src(b) {
                continue;
            }
            let ab = rendezvous(&[a, b]);
            let ba = rendezvous(&[b, a]);
            for s in shuffles(&rendezvous(&[a]), &rendezvous(&[b])) {
                for p in 0..ms.peer_count() {
                    let got = s.peer_projection(ms, p);
                    tally.check(got == ab.peer_projection(ms, p) || got == ba.peer_projection(ms, p), || {
                        format!("{} seen by peer {}", s.display(ms), p + 1)
                    });
                }
            }
        }
    }
    tally.finish(|| "every letter pair with distinct sources".into())
}

/// Up to `max_len` sends from one peer after a rendezvous prefix can also be
/// performed as rendezvous.
pub fn same_source_lifting(
    sys: &System,
    depth: usize,
    max_len: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let ms = sys.messages();
    let prefixes = sync_prefixes(sys, depth, opts)?;
    let outcomes = par::map(&prefixes, opts.parallel, |tau| {
        let seqs = send_sequences(sys, tau, max_len, true);
        for s in &seqs {
            let lifted = tau.concat(&rendezvous(s));
            if reached(sys, &lifted).is_none() {
                return (seqs.len(), Some(format!("{} is not executable", lifted.display(ms))));
            }
        }
        (seqs.len(), None)
    });
    let mut tally = Tally::new(format!("same-source-lifting[{}]", sys.name()));
    tally.absorb(outcomes);
    Ok(tally.finish(|| format!("{} rendezvous prefixes of at most {depth} actions", prefixes.len())))
}

/// Every bounded trace normalizes to a rendezvous prefix followed by sends,
/// reaching a configuration the original reaches.
pub fn normalization(
    sys: &System,
    k: usize,
    depth: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let ms = sys.messages();
    let norm = Normalizer::new(sys, opts)?;
    let traces: Vec<Trace> = build_lts(sys, P2P, k, opts)?.traces_up_to(depth).into_iter().collect();
    let outcomes = par::map(&traces, opts.parallel, |t| {
        let failure = match norm.normalize(t) {
            Err(e) => Some(format!("{}: {e}", t.display(ms))),
            Ok(n) if !is_normalized(&n) => Some(format!("{} gave {}", t.display(ms), n.display(ms))),
            Ok(n) => match (reached(sys, t), reached(sys, &n)) {
                (Some(x), Some(y)) if !x.is_disjoint(&y) => None,
                _ => Some(format!("{} and {} are not equivalent", t.display(ms), n.display(ms))),
            },
        };
        (1, failure)
    });
    let mut tally = Tally::new(format!("normalization[{} k={k}]", sys.name()));
    tally.absorb(outcomes);
    Ok(tally.finish(|| format!("{} traces of at most {depth} actions", traces.len())))
}

/// Every configuration explored at bound `k` is in the regular reachability
/// set and can be drained by receives to a stable configuration.
pub fn reach_and_drain(sys: &System, k: usize, opts: &ExploreOptions) -> Result<PropertyReport, VerifyError> {
    let rep = reach_representation(sys, opts)?;
    let lts = build_lts(sys, P2P, k, opts)?;
    let outcomes = par::map(lts.states(), opts.parallel, |c| {
        let failure = if !reach_contains(&rep, c) {
            Some(format!("{} is not in the representation", c.display(sys, P2P)))
        } else if receive_drain(sys, P2P, c).is_none() {
            Some(format!("{} cannot be drained", c.display(sys, P2P)))
        } else {
            None
        };
        (1, failure)
    });
    let mut tally = Tally::new(format!("reach-and-drain[{} k={k}]", sys.name()));
    tally.absorb(outcomes);
    Ok(tally.finish(|| format!("{} configurations", lts.state_count())))
}

/// The ring verdict agrees with k-synchronizability at the listed bounds.
pub fn ring_consistency(sys: &System, bounds: &[usize], opts: &ExploreOptions) -> Result<PropertyReport, VerifyError> {
    let ring = ring_synchronizable(sys, opts)?.equal;
    let mut tally = Tally::new(format!("ring-consistency[{}]", sys.name()));
    for &k in bounds {
        let v = k_synchronizable(sys, P2P, k, false, opts)?.equal;
        tally.check(v == ring, || format!("ring verdict {ring}, bound {k} verdict {v}"));
    }
    Ok(tally.finish(|| format!("verdict {ring} at bounds 1 and {bounds:?}")))
}

/// Tiling instance to FIFO automaton to merged system: the automaton can
/// dequeue the final tile within some bound up to `max_k`, and the merged
/// system is then not synchronizable at that bound.
pub fn reduction_pipeline(
    t: &TilingInstance,
    max_k: usize,
    opts: &ExploreOptions,
) -> Result<PropertyReport, VerifyError> {
    let a = tiling_to_fifo(t)?;
    let last = a.letter(&t.last).ok_or_else(|| ReduceError::UnknownTile(t.last.clone()))?;
    let sys = fifo_to_system_merged(&a, &t.last)?;
    let mut tally = Tally::new(format!("reduction-pipeline[{}]", a.name));
    let mut found = None;
    for k in 1..=max_k {
        if let Some(tr) = a.trace_ending_in_receive(last, k) {
            let v = k_synchronizable(&sys, P2P, k, true, opts)?;
            found = Some((k, tr, v));
            break;
        }
    }
    match &found {
        None => tally.check(false, || format!("no trace dequeues {} up to bound {max_k}", t.last)),
        Some((k, _, v)) => tally.check(!v.equal, || format!("merged system is {k}-synchronizable")),
    }
    Ok(tally.finish(|| {
        let (k, tr, v) = found.as_ref().expect("found");
        let w = v.witness.as_ref().map(|w| sys.messages().format_word(&w.word)).unwrap_or_default();
        format!("bound {k}: {} dequeues the final tile; witness {w}", a.render_trace(tr))
    }))
}

/// The standard suite over the built-in examples.
pub fn run_suite(opts: &ExploreOptions) -> Result<Vec<PropertyReport>, VerifyError> {
    let ex33 = builtins::example33();
    let no_m = builtins::example33_no_recv_m();
    let mut out = vec![
        fifo_encoding(&ex33, 1, 12, opts)?,
        fifo_encoding(&ex33, 2, 12, opts)?,
        variant_sync_traces(&ex33, "m", 12, opts)?,
        variant_synchronizable(&ex33, "m", &[1, 2, 3], opts)?,
        receive_insertion(&ex33, "m", 2, 10, opts)?,
        reception_reduction(&ex33, "m", 1, opts)?,
        reception_reduction(&no_m, "m", 1, opts)?,
        reduction_pipeline(&TilingInstance::singleton(), 3, opts)?,
    ];
    let systems = builtins::systems();
    for (_, sys) in &systems {
        out.push(shuffle_projection_for(sys));
    }
    for (_, sys) in &systems {
        if !k_synchronizable(sys, P2P, 1, false, opts)?.equal {
            continue;
        }
        out.push(send_diamond(sys, 8, opts)?);
        out.push(general_diamond(sys, 8, 2, opts)?);
        out.push(same_source_lifting(sys, 8, 3, opts)?);
    }
    for (_, sys) in &systems {
        if !sys.topology().is_oriented_ring() {
            continue;
        }
        out.push(ring_consistency(sys, &[2, 3], opts)?);
        if ring_synchronizable(sys, opts)?.equal {
            out.push(normalization(sys, 2, 10, opts)?);
            out.push(reach_and_drain(sys, 3, opts)?);
        }
    }
    Ok(out)
}

fn shuffle_projection_for(sys: &System) -> PropertyReport {
    let mut r = shuffle_projection(sys.messages());
    r.name = format!("{}[{}]", r.name, sys.name());
    r
}
