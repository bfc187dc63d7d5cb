//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use apka_core::apka::Apka;
use apka_core::caps::Caps;
use apka_core::denot::{check_apka, check_hfl};
use apka_core::hierarchy::{banach_iterate, gen_hard, inner_templates, Flavor, GameTreeHandle, HierarchyVocab};
use apka_core::machine::{init_run, parse_script, HardLayout, Pending, RoundKind, RoundTracker, TraceStatus};
use apka_core::random::{all_trees, flip_along, random_apka, random_hfl, random_tree, ApkaShape, HflShape};
use apka_core::syntax::{parse_formula, parse_hfl, Dialect, Formula};
use apka_core::translate::{apka_to_hfl, hfl_to_apka};
use apka_core::trees::{distance, prefix, Dir, DyadicDistance, LazyTree, RegularTree};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn ex1() -> Apka {
    Apka::parse(&data("ex1.apka")).unwrap()
}

fn ex2() -> RegularTree {
    RegularTree::parse(&data("ex2.tree")).unwrap()
}

fn report(n: u32, ok: bool, took: Duration, detail: &str) {
    println!("criterion {n}: {} ({:.2?}) {detail}", if ok { "PASS" } else { "FAIL" }, took);
}

fn trees_up_to(props: &[String], k: usize) -> Vec<RegularTree> {
    (1..=k).flat_map(|j| all_trees(props, j).collect::<Vec<_>>()).collect()
}

// Reference trace of the scripted run: (tree level, subformula, |Γ|, Δ).
const REFERENCE_TRACE: [(u32, &str, usize, &str); 20] = [
    (0, "I", 0, ""),
    (0, "(X !P)", 0, "1"),
    (0, "X", 1, "1"),
    (0, "(<> x) \\/ ([] Y)", 0, "11"),
    (0, "[] Y", 0, "11"),
    (1, "Y", 0, "11"),
    (1, "(X Y)", 0, "110"),
    (1, "X", 1, "110"),
    (1, "(<> x) \\/ ([] Y)", 0, "1101"),
    (1, "<> x", 0, "1101"),
    (2, "x", 0, "1101"),
    (2, "x", 0, "110"),
    (2, "Y", 0, "1101"),
    (2, "(X Y)", 0, "1100"),
    (2, "X", 1, "1100"),
    (2, "(<> x) \\/ ([] Y)", 0, "11001"),
    (2, "<> x", 0, "11001"),
    (3, "x", 0, "1101"),
    (3, "x", 0, "1100"),
    (3, "Y", 0, "1100"),
];

#[test]
fn criterion_01_scripted_replay() {
    let t0 = Instant::now();
    let mut g = init_run(&ex1(), ex2(), None).unwrap();
    let script = parse_script(&data("ex1.script")).unwrap();
    let tr = g.run_script(&script, 20).unwrap();
    let got = tr.projection();
    let mut bad = Vec::new();
    for (i, want) in REFERENCE_TRACE.iter().enumerate() {
        let row = got.get(i).map(|(l, f, g, d)| (*l, f.as_str(), *g, d.as_str()));
        let same = row.is_some_and(|(l, f, g, d)| {
            (l, g, d) == (want.0, want.2, want.3)
                && parse_formula(f, Dialect::ApkaBody).unwrap() == parse_formula(want.1, Dialect::ApkaBody).unwrap()
        });
        if !same {
            bad.push(format!("C{i}: got {row:?}, printed {want:?}"));
        }
    }
    let ok = got.len() == 20 && bad.is_empty() && t0.elapsed() < Duration::from_secs(1);
    report(1, ok, t0.elapsed(), &format!("{}/20 rows match; {}", 20 - bad.len(), bad.join("; ")));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_02_example_two_acceptance() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let (a, t) = (ex1(), ex2());
    let f = parse_hfl(&data("ex1.hfl")).unwrap();
    let by_apka = check_apka(&t, t.root, &a, &caps).unwrap();
    let by_hfl = check_hfl(&t, t.root, &f, &caps).unwrap();
    let by_complement = check_apka(&t, t.root, &a.complement(), &caps).unwrap();
    let ok = by_apka && by_hfl && !by_complement && t0.elapsed() < Duration::from_secs(10);
    report(2, ok, t0.elapsed(), &format!("apka={by_apka} hfl={by_hfl} complement={by_complement}"));
    assert!(ok);
}

#[test]
fn criterion_03_machine_invariants() {
    let t0 = Instant::now();
    let results: Vec<(u64, usize, u64, Vec<String>)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = StdRng::seed_from_u64(seed);
            // half of the automata never reach a literal, so their plays stay long
            let shape = ApkaShape { leaf_terminal_weight: (seed % 2) as u32, ..ApkaShape::default() };
            let a = random_apka(&mut rng, &shape);
            let t = random_tree(&mut rng, &shape.props, 4);
            let mut steps = 0u64;
            let mut restarts = 0;
            let mut post_close = 0;
            let mut violations = Vec::new();
            while steps < 10_000 {
                let mut g = init_run(&a, t.clone(), None).unwrap();
                g.monitor(1);
                while steps < 10_000 && !g.is_finished() {
                    let c = g.legal_random_choice(&mut rng);
                    g.step(c).unwrap();
                    steps += 1;
                }
                let r = g.monitor_report().unwrap();
                post_close += r.post_close_configs;
                violations.extend(r.violations.iter().map(|v| format!("seed {seed}: {v}")));
                restarts += 1;
            }
            (steps, restarts, post_close, violations)
        })
        .collect();
    let steps: u64 = results.iter().map(|r| r.0).sum();
    let plays: usize = results.iter().map(|r| r.1).sum();
    let post_close: u64 = results.iter().map(|r| r.2).sum();
    let violations: Vec<&String> = results.iter().flat_map(|r| &r.3).collect();
    let ok = violations.is_empty();
    report(
        3,
        ok,
        t0.elapsed(),
        &format!("200 runs, {steps} steps, {plays} plays, {post_close} post-close configurations, {} violations", violations.len()),
    );
    assert!(ok, "{:?}", &violations[..violations.len().min(10)]);
}

/// Example 1 plus 49 seeded random automata over one or two propositions.
fn automata_corpus() -> Vec<Apka> {
    let mut rng = StdRng::seed_from_u64(0xA9CA);
    let mut out = vec![ex1()];
    while out.len() < 50 {
        let props: Vec<String> = if out.len() % 2 == 0 { vec!["P".into()] } else { vec!["P".into(), "Q".into()] };
        let shape = ApkaShape { props, max_states: 3, max_priority: 3, depth: 3, ..ApkaShape::default() };
        out.push(random_apka(&mut rng, &shape));
    }
    out
}

#[test]
fn criterion_04_complementation() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let corpus = automata_corpus();
    // every automaton's propositions are among P, Q
    let props = vec!["P".to_string(), "Q".to_string()];
    let checked = AtomicUsize::new(0);
    let failures: Vec<String> = corpus
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, a)| {
            let c = a.complement();
            let trees = trees_up_to(&props, 2);
            checked.fetch_add(trees.len(), Ordering::Relaxed);
            trees.into_iter().filter_map(move |t| {
                let x = check_apka(&t, t.root, a, &caps);
                let y = check_apka(&t, t.root, &c, &caps);
                match (x, y) {
                    (Ok(x), Ok(y)) if x != y => None,
                    (x, y) => Some(format!("automaton {i} on {}: {x:?} / {y:?}", t.serialize().replace('\n', " "))),
                }
            })
        })
        .collect();
    let ok = failures.is_empty() && t0.elapsed() < Duration::from_secs(300);
    report(4, ok, t0.elapsed(), &format!("{} (automaton, tree) pairs, {} exceptions", checked.into_inner(), failures.len()));
    assert!(ok, "{:?}", &failures[..failures.len().min(10)]);
}

const HFL_CORPUS: &[&str] = &[
    "mu X : Pr . <> X",
    "nu X : Pr . P /\\ ([] X)",
    "mu X : Pr . P \\/ (<> X)",
    "nu X : Pr . mu Y : Pr . (P /\\ (<> X)) \\/ (<> Y)",
    "mu X : Pr . nu Y : Pr . (P /\\ ([] X)) \\/ (!P /\\ ([] Y))",
    "((mu F : Pr -> Pr . \\x : Pr . x \\/ (<> (F (<> x)))) P)",
    "((nu F : Pr -> Pr . \\x : Pr . x /\\ ([] (F x))) P)",
    "((mu F : Pr -> Pr . \\x : Pr . (P /\\ x) \\/ (<> (F ([] x)))) tt)",
    "nu X : Pr . ((mu F : Pr -> Pr . \\y : Pr . y \\/ (<> (F y))) ([] X))",
    "((nu F : Pr -> Pr . \\x : Pr . ((mu G : Pr -> Pr . \\y : Pr . (x /\\ y) \\/ (<> (G y))) (F x))) P)",
    "mu X : Pr . (!P /\\ (<> tt)) \\/ ([] X)",
    "((\\x : Pr . (<> x) \\/ ([] x)) (mu X : Pr . P \\/ (<> X)))",
    "((mu F : Pr -> Pr . \\x : Pr . ([] x) /\\ (<> (F (F x)))) !P)",
    "nu X : Pr . ((\\y : Pr . <> y) (P /\\ X))",
    "((nu F : Pr -> Pr . \\x : Pr . (!P \\/ x) /\\ ([] (F (<> x)))) ff)",
    "mu X : Pr . ((nu F : Pr -> Pr . \\x : Pr . (x \\/ X) /\\ (<> (F x))) P)",
    "((mu F : Pr -> Pr . \\x : Pr . x \\/ (F (<> x))) Q) /\\ (nu X : Pr . P \\/ ([] X))",
    "nu X : Pr . mu Y : Pr . (Q /\\ (<> X)) \\/ (P /\\ ([] Y))",
];

fn hfl_corpus() -> Vec<Formula> {
    let mut out: Vec<Formula> = std::iter::once(data("ex1.hfl"))
        .chain(HFL_CORPUS.iter().map(|s| s.to_string()))
        .map(|s| parse_hfl(&s).unwrap())
        .collect();
    let mut rng = StdRng::seed_from_u64(0x4F1);
    let shape = HflShape { props: vec!["P".into()], depth: 4, first_order: true };
    while out.len() < 40 {
        out.push(random_hfl(&mut rng, &shape));
    }
    out
}

fn props_of(f: &Formula) -> Vec<String> {
    let mut props: Vec<String> = f.free_names().into_iter().collect();
    if props.is_empty() {
        props.push("P".into());
    }
    props
}

#[test]
fn criterion_05_translation_fidelity() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let corpus = hfl_corpus();
    let mut pairs = 0usize;
    let mut failures = Vec::new();
    for (i, f) in corpus.iter().enumerate() {
        let a = match hfl_to_apka(f) {
            Ok(a) => a,
            Err(e) => {
                failures.push(format!("formula {i} {f}: {e}"));
                continue;
            }
        };
        let trees = trees_up_to(&props_of(f), 3);
        pairs += trees.len();
        let bad: Vec<String> = trees
            .par_iter()
            .filter_map(|t| {
                let x = check_hfl(t, t.root, f, &caps);
                let y = check_apka(t, t.root, &a, &caps);
                match (&x, &y) {
                    (Ok(x), Ok(y)) if x == y => None,
                    _ => Some(format!("formula {i} {f} on {}: hfl {x:?} apka {y:?}", t.serialize().replace('\n', " "))),
                }
            })
            .collect();
        failures.extend(bad.into_iter().take(3));
    }
    // backward direction and round trip on the automata corpus
    let mut supported = 0;
    let mut refused = 0;
    let automata: Vec<Apka> = automata_corpus().into_iter().chain(corpus.iter().filter_map(|f| hfl_to_apka(f).ok())).collect();
    for (i, a) in automata.iter().enumerate() {
        let f = match apka_to_hfl(a) {
            Ok(f) => f,
            Err(_) => {
                refused += 1;
                continue;
            }
        };
        supported += 1;
        let back = match hfl_to_apka(&f) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("automaton {i}: round trip failed: {e}"));
                continue;
            }
        };
        let k = if a.props.len() == 1 { 3 } else { 2 };
        let trees = trees_up_to(&a.props, k);
        pairs += trees.len();
        let bad: Vec<String> = trees
            .par_iter()
            .filter_map(|t| {
                let x = check_apka(t, t.root, a, &caps);
                let y = check_hfl(t, t.root, &f, &caps);
                let z = check_apka(t, t.root, &back, &caps);
                match (&x, &y, &z) {
                    (Ok(x), Ok(y), Ok(z)) if x == y && y == z => None,
                    _ => Some(format!("automaton {i} on {}: {x:?} {y:?} {z:?}", t.serialize().replace('\n', " "))),
                }
            })
            .collect();
        failures.extend(bad.into_iter().take(3));
    }
    let ok = failures.is_empty() && corpus.len() >= 30;
    report(
        5,
        ok,
        t0.elapsed(),
        &format!(
            "{} formulas, {supported} supported automata ({refused} refused), {pairs} structure checks, {} mismatches",
            corpus.len(),
            failures.len()
        ),
    );
    assert!(ok, "{:?}", &failures[..failures.len().min(10)]);
}

/// Right-nested `/\` spine as a list of conjuncts.
fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(l, r) => {
            let mut v = vec![&**l];
            v.extend(conjuncts(r));
            v
        }
        other => vec![other],
    }
}

#[test]
fn criterion_06_hard_automata_structure() {
    let t0 = Instant::now();
    let mut problems = Vec::new();
    for n in 1..=6usize {
        for fl in [Flavor::Sigma, Flavor::Pi] {
            let a = gen_hard(n, fl).unwrap();
            let tag = format!("{fl} n={n}");
            if !a.validate().is_empty() {
                problems.push(format!("{tag}: {}", a.validate()));
            }
            if a.states.len() != n + 2 {
                problems.push(format!("{tag}: {} states", a.states.len()));
            }
            let shift = if fl == Flavor::Pi { 1 } else { 0 };
            let mut want = vec![("I".to_string(), shift), ("O".to_string(), shift)];
            want.extend((0..n as u32).rev().map(|i| (format!("X_{i}"), i + shift)));
            let got: Vec<(String, u32)> = a.states.iter().map(|s| (s.name.clone(), s.priority)).collect();
            if got != want {
                problems.push(format!("{tag}: priorities {got:?}"));
            }
            let o = &a.state("O").unwrap().body;
            let big = match o {
                Formula::And(l, r) if **l == Formula::neg_prop("F") => match &**r {
                    Formula::Or(t, big) if **t == Formula::prop("T") => Some(&**big),
                    _ => None,
                },
                _ => None,
            };
            let Some(big) = big else {
                problems.push(format!("{tag}: δ(O) is not !F /\\ (T \\/ ...)"));
                continue;
            };
            let cs = conjuncts(big);
            let mut labels: Vec<String> = vec!["D".into(), "C".into(), "V".into()];
            let ks: Vec<usize> = if fl == Flavor::Sigma { (0..n).rev().collect() } else { (1..=n).rev().collect() };
            labels.extend(ks.iter().map(|k| format!("F_{k}")));
            let implications = cs
                .iter()
                .zip(&labels)
                .filter(|(c, l)| matches!(c, Formula::Or(x, _) if **x == Formula::neg_prop(l.as_str())))
                .count();
            if cs.len() != n + 3 || implications != n + 3 {
                problems.push(format!("{tag}: {} conjuncts, {implications} well-formed implications", cs.len()));
            }
        }
    }
    let ok = problems.is_empty();
    report(6, ok, t0.elapsed(), &format!("12 automata, {} problems", problems.len()));
    assert!(ok, "{problems:?}");
}

fn constant_tree(props: Vec<String>, label: &str) -> RegularTree {
    RegularTree::new(props, vec![("s".into(), vec![label.to_string()], "s".into(), "s".into())], "s").unwrap()
}

#[test]
fn criterion_07_round_correspondence() {
    let t0 = Instant::now();
    let jobs: Vec<(usize, usize, u64)> =
        (1..=3).flat_map(|n| (0..3).flat_map(move |ti| (0..100u64).map(move |s| (n, ti, s)))).collect();
    let results: Vec<(usize, u64, Vec<String>)> = jobs
        .par_iter()
        .map(|&(n, ti, seed)| {
            let vocab = HierarchyVocab::new(n, Flavor::Sigma).unwrap();
            let inner = inner_templates(n, Flavor::Sigma).unwrap().swap_remove(ti);
            let hard = gen_hard(n, Flavor::Sigma).unwrap();
            let seed_tree = constant_tree(vocab.props(), "T");
            let h = GameTreeHandle::with_vocab(&inner, seed_tree, vocab).unwrap();
            let mut g = init_run(&hard, h, None).unwrap();
            let layout = HardLayout::from_table(&g.machine.table, n, Flavor::Sigma).unwrap();
            let mut tracker = RoundTracker::new(g.machine.table.clone(), layout);
            let mut rng = StdRng::seed_from_u64(seed * 7919 + ti as u64 * 31 + n as u64);
            tracker.observe(0, &g.config, apka_core::machine::Effect::None, &g.arena, &mut |v| Some(g.tree.inner_prios(v)));
            let mut ended = None;
            while tracker.completed_rounds() < 500 {
                if let Pending::Won { winner, .. } = g.pending() {
                    ended = Some(winner);
                    break;
                }
                let c = g.legal_random_choice(&mut rng);
                let eff = g.step_effect(c).unwrap();
                let tree = &g.tree;
                tracker.observe(g.step, &g.config, eff, &g.arena, &mut |v| Some(tree.inner_prios(v)));
            }
            let mut v: Vec<String> =
                tracker.report.violations.iter().map(|x| format!("n={n} automaton {ti} play {seed}: {x}")).collect();
            if let Some(w) = ended {
                v.push(format!("n={n} automaton {ti} play {seed}: play ended ({w} won) after {} rounds", tracker.completed_rounds()));
            }
            let _ = tracker.rounds.iter().filter(|r| matches!(r.kind, RoundKind::F(_))).count();
            (tracker.completed_rounds(), tracker.report.boundaries_checked, v)
        })
        .collect();
    let rounds: usize = results.iter().map(|r| r.0).sum();
    let boundaries: u64 = results.iter().map(|r| r.1).sum();
    let violations: Vec<&String> = results.iter().flat_map(|r| &r.2).collect();
    let ok = violations.is_empty() && results.iter().all(|r| r.0 >= 500) && t0.elapsed() < Duration::from_secs(120);
    report(
        7,
        ok,
        t0.elapsed(),
        &format!("{} plays, {rounds} rounds, {boundaries} boundaries checked, {} violations", results.len(), violations.len()),
    );
    assert!(ok, "{:?}", &violations[..violations.len().min(10)]);
}

#[test]
fn criterion_08_contraction() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xC0);
    let props = vec!["P".to_string(), "Q".to_string()];
    let mut automata = vec![Apka { props: props.clone(), ..ex1() }];
    let shape = ApkaShape { props: props.clone(), max_states: 3, ..ApkaShape::default() };
    while automata.len() < 5 {
        automata.push(random_apka(&mut rng, &shape));
    }
    let mut problems = Vec::new();
    let mut checked = 0;
    for pair in 0..50 {
        let i = pair % 7;
        let mut t = random_tree(&mut rng, &props, 4);
        let path: Vec<Dir> = (0..i).map(|_| if rng.gen() { Dir::Left } else { Dir::Right }).collect();
        let mut u = flip_along(&t, &path, rng.gen_range(0..props.len()));
        let d = distance(&mut t, &mut u, 32).unwrap();
        if d != DyadicDistance::Exact(i) {
            problems.push(format!("pair {pair}: input distance {d}, expected 2^-{i}"));
            continue;
        }
        for (k, a) in automata.iter().enumerate() {
            let mut ea = GameTreeHandle::new(a, t.clone()).unwrap();
            let mut eb = GameTreeHandle::new(a, u.clone()).unwrap();
            let de = distance(&mut ea, &mut eb, i + 4).unwrap();
            checked += 1;
            if de.agreement_levels() < i + 1 {
                problems.push(format!("pair {pair} automaton {k}: inputs at 2^-{i}, encodings at {de}"));
            }
        }
    }
    let ok = problems.is_empty();
    report(8, ok, t0.elapsed(), &format!("50 pairs, {checked} encoded comparisons, {} violations", problems.len()));
    assert!(ok, "{problems:?}");
}

#[test]
fn criterion_09_banach_fixpoint() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, fl) in [(2, Flavor::Sigma), (1, Flavor::Pi)] {
        let a = gen_hard(n, fl).unwrap();
        let vocab = HierarchyVocab::infer(&a);
        let s1 = constant_tree(vocab.props(), "T");
        let mut rng = StdRng::seed_from_u64(9);
        let s2 = random_tree(&mut rng, &vocab.props(), 3);
        let (p1, r1) = banach_iterate(&a, &s1, 10, 6, &caps).unwrap();
        let (p2, r2) = banach_iterate(&a, &s2, 10, 6, &caps).unwrap();
        let same = p1 == p2;
        ok &= same && r1.residual_zero && r2.residual_zero;
        lines.push(format!("{fl} n={n}: prefixes equal={same} residual zero={}/{}", r1.residual_zero, r2.residual_zero));
    }
    ok &= t0.elapsed() < Duration::from_secs(60);
    report(9, ok, t0.elapsed(), &lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_10_encoder_labels() {
    let t0 = Instant::now();
    let caps = Caps { max_depth: 8, ..Caps::default() };
    let mut nodes = 0usize;
    let mut bad = Vec::new();
    let mut check = |what: String, mut h: Box<dyn LazyTree>| {
        let p = prefix(&mut h, 8, &caps).unwrap();
        nodes += p.labels.len();
        let k = p.labels.iter().filter(|l| l.len() != 1).count();
        if k > 0 {
            bad.push(format!("{what}: {k} nodes without exactly one label"));
        }
    };
    check("example 1".into(), Box::new(GameTreeHandle::new(&ex1(), ex2()).unwrap()));
    let mut rng = StdRng::seed_from_u64(10);
    let shape = ApkaShape::default();
    for i in 0..20 {
        let a = random_apka(&mut rng, &shape);
        let t = random_tree(&mut rng, &shape.props, 4);
        check(format!("random {i}"), Box::new(GameTreeHandle::new(&a, t).unwrap()));
    }
    for n in 1..=3 {
        for (i, a) in inner_templates(n, Flavor::Sigma).unwrap().into_iter().enumerate() {
            let t = constant_tree(HierarchyVocab::new(n, Flavor::Sigma).unwrap().props(), "D");
            check(format!("template {i} n={n}"), Box::new(GameTreeHandle::new(&a, t).unwrap()));
        }
    }
    // encoded labels along the path of the scripted run
    let mut g = init_run(&ex1(), ex2(), None).unwrap();
    let tr = g.run_script(&parse_script(&data("ex1.script")).unwrap(), 12).unwrap();
    assert_eq!(tr.status, TraceStatus::MaxSteps);
    let path: Vec<Dir> = tr.entries[1..12].iter().map(|e| e.choice.unwrap_or(Dir::Left)).collect();
    let mut h = GameTreeHandle::new(&ex1(), ex2()).unwrap();
    let labels = h.path_labels(&path);
    let want = ["F_1", "D", "F_1", "D", "C", "F_0", "D", "F_1", "D", "D", "V", "D"];
    if labels != want {
        bad.push(format!("encoded path labels {labels:?}"));
    }
    let ok = bad.is_empty();
    report(10, ok, t0.elapsed(), &format!("{nodes} prefix nodes, encoded path {}", labels.join(" ")));
    assert!(ok, "{bad:?}");
}
