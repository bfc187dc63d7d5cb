use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use apka_core::apka::Apka;
use apka_core::trees::PrefixTree;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect()
}

fn apka(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apka")).args(args).env_remove("APKA_CAPS").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_example_two() {
    let o = apka(&["check", "--tree", s(&data("ex2.tree")), "--node", "n0", "--apka", s(&data("ex1.apka"))]);
    assert_eq!((stdout(&o).trim(), o.status.code()), ("true", Some(0)));
    let o = apka(&["check", "--tree", s(&data("ex2.tree")), "--node", "n0", "--hfl", s(&data("ex1.hfl"))]);
    assert_eq!((stdout(&o).trim(), o.status.code()), ("true", Some(0)));
}

#[test]
fn complement_is_rejected() {
    let dir = TempDir::new().unwrap();
    let c = dir.path().join("c.apka");
    assert!(apka(&["complement", s(&data("ex1.apka")), "-o", s(&c)]).status.success());
    assert!(Apka::parse(&std::fs::read_to_string(&c).unwrap()).is_ok());
    let o = apka(&["check", "--tree", s(&data("ex2.tree")), "--node", "n0", "--apka", s(&c)]);
    assert_eq!((stdout(&o).trim(), o.status.code()), ("false", Some(1)));
}

#[test]
fn simulate_replays_the_scripted_run() {
    let o = apka(&[
        "simulate",
        "--apka",
        s(&data("ex1.apka")),
        "--tree",
        s(&data("ex2.tree")),
        "--script",
        s(&data("ex1.script")),
        "--max-steps",
        "20",
        "--monitors",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let steps: Vec<&str> = out.lines().filter(|l| l.starts_with("step")).collect();
    assert_eq!(steps.len(), 20);
    assert!(steps[8].contains("D=1101") && steps[8].ends_with("(<> x) \\/ ([] Y)"), "{}", steps[8]);
    assert!(steps[19].contains("node=n2 depth=3") && steps[19].ends_with("| Y"), "{}", steps[19]);
    assert!(out.contains("stopped: step limit"));
    assert!(out.contains("0 violations"));
}

#[test]
fn simulate_interactive_reads_choices() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_apka"))
        .args(["simulate", "--apka", s(&data("ex1.apka")), "--tree", s(&data("ex2.tree")), "--interactive"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"L\nL\n").unwrap();
    let o = child.wait_with_output().unwrap();
    let out = stdout(&o);
    assert!(out.contains("∃? [L: <> x] [R: [] Y]"), "{out}");
    assert!(out.contains("∀ wins"), "{out}");
}

#[test]
fn gen_hard_validates() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("h2.apka");
    assert!(apka(&["gen-hard", "--n", "2", "--class", "sigma", "-o", s(&h)]).status.success());
    let o = apka(&["validate", s(&h)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(Apka::parse(&std::fs::read_to_string(&h).unwrap()).unwrap().states.len(), 4);
}

#[test]
fn translate_both_ways() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.apka");
    let f = dir.path().join("f.hfl");
    assert!(apka(&["translate", "--to", "apka", s(&data("ex1.hfl")), "-o", s(&a)]).status.success());
    assert!(apka(&["translate", "--to", "hfl", s(&a), "-o", s(&f)]).status.success());
    let o = apka(&["typecheck", s(&f), "--dialect", "hfl"]);
    assert_eq!((stdout(&o).trim(), o.status.code()), ("Pr", Some(0)));
    let o = apka(&["check", "--tree", s(&data("ex2.tree")), "--node", "n1", "--hfl", s(&f)]);
    assert_eq!(stdout(&o).trim(), "true");
}

#[test]
fn encode_fixpoint_and_distance() {
    let dir = TempDir::new().unwrap();
    let e = dir.path().join("e.prefix");
    assert!(apka(&["encode", "--tree", s(&data("ex2.tree")), "--apka", s(&data("ex1.apka")), "--depth", "4", "-o", s(&e)])
        .status
        .success());
    let p = PrefixTree::parse(&std::fs::read_to_string(&e).unwrap()).unwrap();
    assert_eq!(p.label_names(0), ["F_1"]);
    assert_eq!(p.label_names(1), ["D"]);

    let h = dir.path().join("h.apka");
    let seed = dir.path().join("seed.tree");
    let f = dir.path().join("f.prefix");
    std::fs::write(&seed, "props D C V T F F_0 F_1\nroot s\nnode s { labels C ; left s ; right s }\n").unwrap();
    assert!(apka(&["gen-hard", "--n", "2", "--class", "sigma", "-o", s(&h)]).status.success());
    let o = apka(&["fixpoint", "--apka", s(&h), "--seed", s(&seed), "--iters", "8", "--depth", "5", "-o", s(&f)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("residual zero"), "{}", stdout(&o));
    let o = apka(&["distance", s(&f), s(&f), "--cap", "9"]);
    assert_eq!(stdout(&o).trim(), "<= 2^-6");
    let o = apka(&["distance", s(&data("ex2.tree")), s(&data("ex2.tree"))]);
    assert_eq!(stdout(&o).trim(), "<= 2^-32");
}

#[test]
fn exit_codes() {
    assert_eq!(apka(&["check", "--tree", "x"]).status.code(), Some(2));
    assert_eq!(apka(&["validate", "/nonexistent.apka"]).status.code(), Some(3));
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.hfl");
    std::fs::write(&bad, "(P Q)").unwrap();
    assert_eq!(apka(&["typecheck", s(&bad), "--dialect", "hfl"]).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_apka"))
        .args(["check", "--tree", s(&data("ex2.tree")), "--node", "n0", "--apka", s(&data("ex1.apka"))])
        .env("APKA_CAPS", "states=2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
    let o = apka(&["--caps", "states=2", "check", "--tree", s(&data("ex2.tree")), "--node", "n0", "--apka", s(&data("ex1.apka"))]);
    assert_eq!(o.status.code(), Some(4));
}
