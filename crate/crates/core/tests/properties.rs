use std::collections::BTreeMap;

use apka_core::apka::{Apka, Parity};
use apka_core::caps::Caps;
use apka_core::denot::{eval_hfl, Interpretation, SemValue};
use apka_core::hierarchy::GameTreeHandle;
use apka_core::machine::init_run;
use apka_core::random::{random_apka, random_hfl, random_tree, ApkaShape, HflShape};
use apka_core::syntax::{parse_hfl, typecheck, Dialect, FixKind, Formula, TypingContext};
use apka_core::translate::{hfl_to_apka, normalize_hfl};
use apka_core::trees::{distance, prefix, DyadicDistance, RegularTree};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn hfl(seed: u64) -> Formula {
    random_hfl(&mut StdRng::seed_from_u64(seed), &HflShape::default())
}

fn automaton(seed: u64) -> Apka {
    random_apka(&mut StdRng::seed_from_u64(seed), &ApkaShape::default())
}

fn tree(seed: u64, max_states: usize) -> RegularTree {
    random_tree(&mut StdRng::seed_from_u64(seed), &["P".to_string(), "Q".to_string()], max_states)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn hfl_print_parse_round_trip(seed in any::<u64>()) {
        let f = hfl(seed);
        prop_assert_eq!(parse_hfl(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn apka_print_parse_round_trip(seed in any::<u64>()) {
        let a = automaton(seed);
        prop_assert_eq!(Apka::parse(&a.serialize()).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn typing_is_stable_under_reprinting(seed in any::<u64>()) {
        let f = hfl(seed);
        let t = typecheck(&TypingContext::new(), &f, Dialect::Hfl).unwrap();
        let g = parse_hfl(&f.to_string()).unwrap();
        prop_assert_eq!(typecheck(&TypingContext::new(), &g, Dialect::Hfl).unwrap(), t);
    }

    #[test]
    fn complement_is_an_involution(seed in any::<u64>()) {
        let a = automaton(seed);
        let c = a.complement();
        prop_assert!(c.validate().is_empty());
        prop_assert_eq!(c.complement(), a.clone());
        for (s, t) in a.states.iter().zip(&c.states) {
            prop_assert_ne!(Parity::of(s.priority), Parity::of(t.priority));
        }
    }

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        let f = hfl(seed);
        prop_assert_eq!(f.dual().dual(), f);
    }

    #[test]
    fn dual_denotes_the_complement(seed in any::<u64>(), tseed in any::<u64>()) {
        let f = hfl(seed);
        let t = tree(tseed, 3);
        let caps = Caps::default();
        let full = (1u64 << t.len()) - 1;
        let v = eval_hfl(&t, &Interpretation::new(), &f, &caps).unwrap();
        let w = eval_hfl(&t, &Interpretation::new(), &f.dual(), &caps).unwrap();
        prop_assert_eq!(w, SemValue::Set(full ^ v.as_set().unwrap()), "{}", f);
    }

    #[test]
    fn distance_is_a_symmetric_ultrametric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (mut x, mut y, mut z) = (tree(a, 4), tree(b, 4), tree(c, 4));
        let cap = 16;
        let xy = distance(&mut x, &mut y, cap).unwrap();
        prop_assert_eq!(xy, distance(&mut y, &mut x, cap).unwrap());
        let mut x2 = x.clone();
        prop_assert_eq!(distance(&mut x, &mut x2, cap).unwrap(), DyadicDistance::AtMost(cap));
        let yz = distance(&mut y, &mut z, cap).unwrap();
        let xz = distance(&mut x, &mut z, cap).unwrap();
        prop_assert!(xz.agreement_levels() >= xy.agreement_levels().min(yz.agreement_levels()));
    }

    #[test]
    fn prefixes_are_consistent(seed in any::<u64>(), d in 0usize..12) {
        let mut t = tree(seed, 4);
        let caps = Caps { max_depth: 13, ..Caps::default() };
        let p = prefix(&mut t, d + 1, &caps).unwrap();
        prop_assert_eq!(p.truncate(d), prefix(&mut t, d, &caps).unwrap());
    }

    #[test]
    fn encoded_prefixes_are_consistent(seed in any::<u64>(), d in 0usize..8) {
        let a = automaton(seed);
        let mut h = GameTreeHandle::new(&a, tree(seed ^ 1, 4)).unwrap();
        let caps = Caps::default();
        let p = prefix(&mut h, d + 1, &caps).unwrap();
        prop_assert_eq!(p.truncate(d), prefix(&mut h, d, &caps).unwrap());
        prop_assert!(p.labels.iter().all(|l| l.len() == 1));
    }

    #[test]
    fn random_runs_keep_the_invariants(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_apka(&mut rng, &ApkaShape { leaf_terminal_weight: 1, ..ApkaShape::default() });
        let mut g = init_run(&a, tree(seed, 4), None).unwrap();
        g.monitor(1);
        for _ in 0..500 {
            if g.is_finished() {
                break;
            }
            let c = g.legal_random_choice(&mut rng);
            g.step(c).unwrap();
        }
        let r = g.monitor_report().unwrap();
        prop_assert!(r.violations.is_empty(), "{}", r);
    }

    #[test]
    fn hfl_to_apka_preserves_order(seed in any::<u64>()) {
        let f = hfl(seed);
        let a = hfl_to_apka(&f).unwrap();
        prop_assert!(a.validate().is_empty());
        prop_assert_eq!(a.order(), f.binder_order());
    }

    #[test]
    fn priorities_are_minimal(seed in any::<u64>()) {
        let f = hfl(seed);
        let a = hfl_to_apka(&f).unwrap();
        let g = normalize_hfl(&f).unwrap();
        let mut fixes = BTreeMap::new();
        collect_fixpoints(&g, &mut fixes);
        for s in &a.states {
            let (kind, inner, vacuous) = &fixes[&s.name];
            let floor = inner.iter().map(|y| a.state(y).unwrap().priority).max().unwrap_or(0);
            prop_assert!(s.priority >= floor, "{} below an inner fixpoint", s.name);
            if *vacuous {
                prop_assert_eq!(s.priority, floor, "{}", s.name);
            } else {
                let want = if *kind == FixKind::Mu { Parity::Odd } else { Parity::Even };
                prop_assert_eq!(Parity::of(s.priority), want, "{}", s.name);
                prop_assert!(s.priority < floor + 2, "{} could be lowered by 2", s.name);
            }
        }
    }
}

/// Fixpoint name -> (kind, names of fixpoints strictly inside, vacuous).
fn collect_fixpoints(f: &Formula, out: &mut BTreeMap<String, (FixKind, Vec<String>, bool)>) {
    f.visit(&mut |g| {
        if let Some((kind, x, _, body)) = g.as_fix() {
            let mut inner = Vec::new();
            body.visit(&mut |h| {
                if let Some((_, y, _, _)) = h.as_fix() {
                    inner.push(y.to_string());
                }
            });
            out.insert(x.to_string(), (kind, inner, !body.occurs_free(x)));
        }
    });
}
