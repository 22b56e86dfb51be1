mod common;

use std::collections::BTreeSet;

use cfsm::decide::{is_normalized, k_synchronizable, Normalizer};
use cfsm::explore::{build_lts, observables};
use cfsm::lang::{counterexample_word, language_subset, Symbol};
use cfsm::reduce::{builtins, fifo_to_system, morphism_h};
use cfsm::trace::{causally_equivalent, exists_equiv_k_bounded, shuffles, sync_trace_of};
use cfsm::{Action, Configuration, ExploreOptions, MessageSet, SemanticsKind, System, Trace};
use common::*;
use proptest::prelude::*;
use rand::Rng;

const P2P: SemanticsKind = SemanticsKind::P2pFifo;

fn systems() -> Vec<System> {
    builtins::systems().into_iter().map(|(_, s)| s).collect()
}

fn opts() -> ExploreOptions {
    ExploreOptions::default()
}

/// Random adjacent swaps of actions from different peers; projections are unchanged.
fn commute(rng: &mut rand::rngs::StdRng, ms: &MessageSet, t: &Trace, swaps: usize) -> Trace {
    let mut acts = t.actions().to_vec();
    if acts.len() < 2 {
        return t.clone();
    }
    for _ in 0..swaps {
        let i = rng.random_range(0..acts.len() - 1);
        if ms.peer_of(acts[i]) != ms.peer_of(acts[i + 1]) {
            acts.swap(i, i + 1);
        }
    }
    Trace::from(acts)
}

fn executable_trace(rng: &mut rand::rngs::StdRng, sys: &System, max_len: usize) -> Trace {
    let mut t = random_trace(rng, sys, max_len);
    while sys.run_all(P2P, &t).is_err() {
        t.pop();
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn step_moves_one_peer_and_one_buffer(seed in any::<u64>(), pick in 0usize..64, sem_idx in 0usize..3) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let sem = SemanticsKind::ALL[sem_idx];
        let mut rng = rng(seed);
        let mut c = sys.initial_configuration(sem);
        for _ in 0..12 {
            let moves = sys.enabled_moves(sem, &c);
            if moves.is_empty() {
                break;
            }
            for mv in &moves {
                let next = sys.apply(sem, &c, mv);
                for p in 0..sys.peer_count() {
                    prop_assert!(p == mv.peer || next.control[p] == c.control[p]);
                }
                prop_assert_eq!(next.control[mv.peer], mv.target);
                let changed = c.buffers.iter().zip(&next.buffers).filter(|(x, y)| x != y).count();
                prop_assert_eq!(changed, 1);
            }
            c = sys.apply(sem, &c, &moves[rng.random_range(0..moves.len())]);
        }
    }

    #[test]
    fn run_succeeds_iff_fifo_and_peer_paths(seed in any::<u64>(), pick in 0usize..64) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let ms = sys.messages();
        let t = random_trace(&mut rng(seed), sys, 10);
        let by_parts = max_in_flight(ms, &t).is_some()
            && (0..sys.peer_count()).all(|i| peer_accepts(sys, i, &t.peer_projection(ms, i)));
        prop_assert_eq!(sys.run_all(P2P, &t).is_ok(), by_parts);
        prop_assert_eq!(t.is_fifo(ms), max_in_flight(ms, &t).is_some());
    }

    #[test]
    fn causal_equivalence_is_a_congruence(seed in any::<u64>(), pick in 0usize..64) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let ms = sys.messages();
        let mut r = rng(seed);
        let a = random_trace(&mut r, sys, 8);
        let b = commute(&mut r, ms, &a, 6);
        let c = commute(&mut r, ms, &b, 6);
        let eq = |x: &Trace, y: &Trace| causally_equivalent(ms, x, y);
        prop_assert_eq!(eq(&a, &a), a.is_fifo(ms));
        prop_assert_eq!(eq(&a, &b), eq(&b, &a));
        if eq(&a, &b) && eq(&b, &c) {
            prop_assert!(eq(&a, &c));
        }
        let u = random_trace(&mut r, sys, 4);
        if eq(&a, &b) {
            for (x, y) in [(a.concat(&u), b.concat(&u)), (u.concat(&a), u.concat(&b))] {
                if x.is_fifo(ms) && y.is_fifo(ms) {
                    prop_assert!(eq(&x, &y));
                }
            }
        }
    }

    #[test]
    fn causally_equivalent_runs_meet(seed in any::<u64>(), pick in 0usize..64) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let ms = sys.messages();
        let mut r = rng(seed);
        let a = executable_trace(&mut r, sys, 10);
        let b = commute(&mut r, ms, &a, 10);
        if causally_equivalent(ms, &a, &b) {
            if let (Ok(x), Ok(y)) = (sys.run_all(P2P, &a), sys.run_all(P2P, &b)) {
                prop_assert!(!x.is_disjoint(&y));
            }
        }
    }

    #[test]
    fn buffer_defined_on_prefixes_iff_channel_fifo(seed in any::<u64>(), pick in 0usize..64) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let ms = sys.messages();
        let t = random_trace(&mut rng(seed), sys, 10);
        for i in 0..ms.peer_count() {
            for j in 0..ms.peer_count() {
                if i == j {
                    continue;
                }
                let defined = (0..=t.len()).all(|n| t.prefix(n).buffer_after(ms, i, j).is_some());
                let ch = t.channel_projection(ms, i, j);
                prop_assert_eq!(defined, max_in_flight(ms, &ch).is_some());
                prop_assert_eq!(defined, ch.is_fifo(ms));
            }
        }
    }

    #[test]
    fn sync_trace_keeps_send_word(seed in any::<u64>(), pick in 0usize..64) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let t = random_trace(&mut rng(seed), sys, 12);
        let s = sync_trace_of(&t);
        prop_assert_eq!(s.send_projection(), t.send_projection());
        prop_assert!(s.is_synchronous());
    }

    #[test]
    fn shuffle_count_is_binomial(n in 0usize..5, m in 0usize..5) {
        let mut ms = MessageSet::new(2);
        let letters: Vec<_> = (0..n + m).map(|i| ms.add(&format!("x{i}"), 0, 1).unwrap()).collect();
        let u: Trace = letters[..n].iter().map(|&l| Action::send(l)).collect();
        let v: Trace = letters[n..].iter().map(|&l| Action::receive(l)).collect();
        let binom = |a: usize, b: usize| (1..=b).fold(1usize, |acc, i| acc * (a - b + i) / i);
        prop_assert_eq!(shuffles(&u, &v).len(), binom(n + m, n));
    }

    #[test]
    fn determinize_and_minimize_preserve_language(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_nfa(&mut r, 5, 3);
        let d = a.determinize();
        prop_assert!(d.is_deterministic());
        prop_assert!(d.determinize().isomorphic_dfa(&d));
        let min = a.minimize();
        prop_assert!(min.state_count() <= d.state_count());
        for w in all_words(&[0, 1, 2], 6) {
            let x = nfa_accepts(&a, &w);
            prop_assert_eq!(nfa_accepts(&d, &w), x);
            prop_assert_eq!(nfa_accepts(&min, &w), x);
        }
    }

    #[test]
    fn counterexamples_are_shortest_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = random_pair(&mut r, 4, 2);
        let bound = a.state_count() + b.state_count();
        let words = all_words(&[0, 1], bound);
        let first_diff = words.iter().find(|w| nfa_accepts(&a, w) && !nfa_accepts(&b, w));
        let cex = counterexample_word(&a, &b);
        prop_assert_eq!(cex.is_none(), language_subset(&a, &b));
        match (cex, first_diff) {
            (Some(w), Some(d)) => {
                prop_assert!(nfa_accepts(&a, &w) && !nfa_accepts(&b, &w));
                prop_assert_eq!(w.len(), d.len());
            }
            (None, Some(d)) => prop_assert!(false, "missed difference {:?}", d),
            (Some(w), None) => prop_assert!(w.len() > bound),
            (None, None) => {}
        }
    }

    #[test]
    fn prefix_closure_survives_determinization(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut a = random_nfa(&mut r, 5, 2);
        for q in 0..a.state_count() {
            a.set_accepting(q, true);
        }
        let d = a.minimize();
        for w in all_words(&[0, 1], 6) {
            if nfa_accepts(&d, &w) {
                for n in 0..w.len() {
                    prop_assert!(nfa_accepts(&d, &w[..n]));
                }
            }
        }
    }

    #[test]
    fn lts_membership_matches_run_and_bound(seed in any::<u64>(), pick in 0usize..64, k in 0usize..3) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let ms = sys.messages();
        let lts = build_lts(sys, P2P, k, &opts()).unwrap();
        let t = random_trace(&mut rng(seed), sys, 10);
        let expected = sys.run_all(P2P, &t).is_ok() && t.is_k_bounded(ms, k);
        prop_assert_eq!(lts.accepts_trace(&t), expected, "{}", t.display(ms));
    }

    #[test]
    fn equivalent_bounded_reordering_is_sound(seed in any::<u64>(), pick in 0usize..64, k in 0usize..3) {
        let all = systems();
        let sys = &all[pick % all.len()];
        let ms = sys.messages();
        let t = executable_trace(&mut rng(seed), sys, 8);
        match exists_equiv_k_bounded(ms, &t, k) {
            Some(w) => {
                prop_assert!(causally_equivalent(ms, &t, &w));
                prop_assert!(w.is_k_bounded(ms, k));
            }
            None => prop_assert!(!t.is_k_bounded(ms, k)),
        }
    }

    #[test]
    fn normalization_on_random_ring_traces(seed in any::<u64>(), pick in 0usize..64) {
        let rings: Vec<System> = systems()
            .into_iter()
            .filter(|s| s.topology().is_oriented_ring() && Normalizer::new(s, &opts()).is_ok())
            .collect();
        let sys = &rings[pick % rings.len()];
        let t = executable_trace(&mut rng(seed), sys, 12);
        let n = Normalizer::new(sys, &opts()).unwrap().normalize(&t).unwrap();
        prop_assert!(is_normalized(&n));
        let (x, y) = (sys.run_all(P2P, &t).unwrap(), sys.run_all(P2P, &n).unwrap());
        prop_assert!(!x.is_disjoint(&y));
    }
}

#[test]
fn point_to_point_and_mailbox_agree_on_two_peers() {
    let mb = SemanticsKind::MailboxFifo;
    for sys in systems().into_iter().filter(|s| s.peer_count() == 2) {
        let ms = sys.messages();
        let rekey = |c: &Configuration| {
            let mut buffers = vec![Vec::new(); mb.slot_count(2)];
            for w in c.buffers.iter().filter(|w| !w.is_empty()) {
                buffers[mb.slot(ms, w[0])] = w.clone();
            }
            Configuration { control: c.control.clone(), buffers }
        };
        for k in 0..=3 {
            let p = build_lts(&sys, P2P, k, &opts()).unwrap();
            let m = build_lts(&sys, mb, k, &opts()).unwrap();
            let edges = |lts: &cfsm::BoundedLts, key: &dyn Fn(&Configuration) -> Configuration| {
                let mut out = BTreeSet::new();
                for i in 0..lts.state_count() {
                    for &(l, j) in lts.edges(i) {
                        out.insert((key(lts.state(i)), l, key(lts.state(j))));
                    }
                }
                out
            };
            let pm: BTreeSet<_> = p.states().iter().map(rekey).collect();
            let mm: BTreeSet<_> = m.states().iter().cloned().collect();
            assert_eq!(pm, mm, "{} k={k}", sys.name());
            assert_eq!(edges(&p, &rekey), edges(&m, &|c: &Configuration| c.clone()), "{} k={k}", sys.name());
        }
    }
}

#[test]
fn bounded_observables_grow_with_the_bound() {
    for sys in systems() {
        for k in 0..3 {
            let lo = observables(&build_lts(&sys, P2P, k, &opts()).unwrap());
            let hi = observables(&build_lts(&sys, P2P, k + 1, &opts()).unwrap());
            assert!(language_subset(&lo.send_language, &hi.send_language), "{} k={k}", sys.name());
            for (c, lang) in &lo.stable_map {
                let upper =
                    hi.stable_map.get(c).unwrap_or_else(|| panic!("{} lost a stable configuration", sys.name()));
                assert!(language_subset(lang, upper), "{} k={k}", sys.name());
            }
        }
    }
}

#[test]
fn explored_paths_are_fifo_and_bounded() {
    for sys in systems() {
        let ms = sys.messages();
        let one = build_lts(&sys, P2P, 1, &opts()).unwrap();
        for t in build_lts(&sys, P2P, 0, &opts()).unwrap().traces_up_to(8) {
            assert!(t.is_synchronous());
            assert!(one.accepts_trace(&t), "{} {}", sys.name(), t.display(ms));
        }
        for k in 1..=2 {
            for t in build_lts(&sys, P2P, k, &opts()).unwrap().traces_up_to(8) {
                assert!(t.is_fifo(ms) && t.is_k_bounded(ms, k), "{} {}", sys.name(), t.display(ms));
            }
        }
    }
}

#[test]
fn witnesses_separate_the_observables() {
    for sys in systems() {
        for k in 1..=2 {
            let v = k_synchronizable(&sys, P2P, k, false, &opts()).unwrap();
            let lo = observables(&build_lts(&sys, P2P, 0, &opts()).unwrap());
            let hi = observables(&build_lts(&sys, P2P, k, &opts()).unwrap());
            assert!(language_subset(&lo.send_language, &hi.send_language));
            let Some(w) = v.witness else { continue };
            let word: Vec<Symbol> = w.word.iter().map(|l| l.0).collect();
            match &w.stable {
                None => {
                    assert!(nfa_accepts(&hi.send_language, &word), "{}", sys.name());
                    assert!(!nfa_accepts(&lo.send_language, &word), "{}", sys.name());
                }
                Some(c) => {
                    assert!(nfa_accepts(&hi.stable_map[c], &word), "{}", sys.name());
                    assert!(lo.stable_map.get(c).is_none_or(|l| !nfa_accepts(l, &word)), "{}", sys.name());
                }
            }
        }
    }
}

#[test]
fn encoding_image_preserves_the_bound() {
    for a in [builtins::example33(), builtins::tiling_singleton()] {
        let sys = fifo_to_system(&a).unwrap();
        let ms = sys.messages();
        for k in 1..=2 {
            let lts = build_lts(&sys, P2P, k, &opts()).unwrap();
            for t in a.bounded_runs(k, 8).keys() {
                let image = morphism_h(&a, &sys, t);
                assert!(image.is_k_bounded(ms, k), "{}", image.display(ms));
                assert!(lts.accepts_trace(&image), "{}", image.display(ms));
            }
        }
    }
}

/// Exploratory: no reference verdicts exist for bags. Each channel of this
/// system only ever carries one letter kind, so bags behave like queues here.
#[test]
fn example22_under_bags() {
    let sys = builtins::example22();
    let bag = SemanticsKind::P2pBag;
    assert!(k_synchronizable(&sys, bag, 1, true, &opts()).unwrap().equal);
    let v = k_synchronizable(&sys, bag, 2, true, &opts()).unwrap();
    assert_eq!(sys.messages().format_word(&v.witness.unwrap().word), "a@1>2 a@1>2 b@1>3 c@3>2 d@2>1");
    for k in 1..=3 {
        let p = k_synchronizable(&sys, P2P, k, false, &opts()).unwrap();
        let b = k_synchronizable(&sys, bag, k, false, &opts()).unwrap();
        assert_eq!(p.equal, b.equal, "k={k}");
    }
}
