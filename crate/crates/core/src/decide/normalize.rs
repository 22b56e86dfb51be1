use crate::decide::{ring_synchronizable, DecideError};
use crate::explore::ExploreOptions;
use crate::model::{Letter, SemanticsKind, System};
use crate::trace::{Action, Trace};

/// A rendezvous prefix followed only by sends.
pub fn is_normalized(t: &Trace) -> bool {
    let acts = t.actions();
    let mut i = 0;
    while i + 1 < acts.len() && acts[i].is_send() && acts[i + 1] == Action::receive(acts[i].letter) {
        i += 2;
    }
    acts[i..].iter().all(|a| a.is_send())
}

/// Rewrites traces of a verified 1-synchronizable ring system into normalized form.
pub struct Normalizer<'a> {
    sys: &'a System,
}

impl<'a> Normalizer<'a> {
    /// Checks the ring and 1-synchronizability preconditions once.
    pub fn new(sys: &'a System, opts: &ExploreOptions) -> Result<Self, DecideError> {
        if !ring_synchronizable(sys, opts)?.equal {
            return Err(DecideError::NotSynchronizable);
        }
        Ok(Normalizer { sys })
    }

    /// Builds the normalized form action by action.
    ///
    /// A send is appended to the pending sends. A receive `?a` sent by peer
    /// `i` splits the pending sends into those of peer `i`, which must start
    /// with `a`, and the others; the result is the rendezvous prefix, `!?a`,
    /// the others, then the rest of peer `i`'s sends. The output is checked
    /// by execution to reach a configuration the input reaches.
    pub fn normalize(&self, t: &Trace) -> Result<Trace, DecideError> {
        let sem = SemanticsKind::P2pFifo;
        let reached = self.sys.run_all(sem, t)?;
        let ms = self.sys.messages();
        let mut prefix: Vec<Action> = Vec::new();
        let mut pending: Vec<Letter> = Vec::new();
        for &act in t {
            if act.is_send() {
                pending.push(act.letter);
                continue;
            }
            let a = act.letter;
            let src = ms.src(a);
            let (own, others): (Vec<Letter>, Vec<Letter>) = pending.iter().partition(|&&l| ms.src(l) == src);
            if own.first() != Some(&a) {
                return Err(DecideError::Normalization(format!(
                    "receive ?{} does not match the oldest pending send of peer {}",
                    ms.name(a),
                    src + 1
                )));
            }
            prefix.push(Action::send(a));
            prefix.push(Action::receive(a));
            pending = others;
            pending.extend_from_slice(&own[1..]);
        }
        let out: Trace = prefix.into_iter().chain(pending.into_iter().map(Action::send)).collect();
        let out_reached = self.sys.run_all(sem, &out)?;
        if reached.is_disjoint(&out_reached) {
            return Err(DecideError::Normalization("normalized trace reaches a different configuration".into()));
        }
        Ok(out)
    }
}

/// One-shot form of [`Normalizer::normalize`].
pub fn normalize_trace(sys: &System, t: &Trace, opts: &ExploreOptions) -> Result<Trace, DecideError> {
    Normalizer::new(sys, opts)?.normalize(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::builtins;

    #[test]
    fn normalizes_ring_trace() {
        let sys = builtins::ring_normalize();
        let ms = sys.messages();
        let t = Trace::parse(ms, "!a !c ?a ?c !b").unwrap();
        let n = normalize_trace(&sys, &t, &ExploreOptions::default()).unwrap();
        assert_eq!(n.display(ms).to_string(), "!?a !?c !b");
        assert!(is_normalized(&n));
    }

    #[test]
    fn identity_cases() {
        let sys = builtins::ring2_sync();
        let ms = sys.messages();
        let norm = Normalizer::new(&sys, &ExploreOptions::default()).unwrap();
        for s in ["", "!?a", "!?a !b", "!?a !?b"] {
            let t = Trace::parse(ms, s).unwrap();
            assert_eq!(norm.normalize(&t).unwrap(), t);
        }
    }

    #[test]
    fn preconditions() {
        let opts = ExploreOptions::default();
        let t = Trace::new();
        assert_eq!(normalize_trace(&builtins::example22(), &t, &opts).unwrap_err(), DecideError::NotRing);
        assert_eq!(normalize_trace(&builtins::ring2_unsync(), &t, &opts).unwrap_err(), DecideError::NotSynchronizable);
        let sys = builtins::ring2_sync();
        let bad = Trace::parse(sys.messages(), "?a").unwrap();
        assert!(matches!(normalize_trace(&sys, &bad, &opts), Err(DecideError::NotExecutable(_))));
    }

    #[test]
    fn normalized_shape() {
        let ms = builtins::ring2_sync();
        let ms = ms.messages();
        assert!(is_normalized(&Trace::parse(ms, "!?a !b !a").unwrap()));
        assert!(!is_normalized(&Trace::parse(ms, "!a !b ?a").unwrap()));
    }
}
