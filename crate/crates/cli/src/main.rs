use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apka_core::apka::Apka;
use apka_core::caps::Caps;
use apka_core::denot::{check_apka, check_hfl, DenotError};
use apka_core::hierarchy::{banach_iterate, encode_prefix, gen_hard, Flavor, HierarchyError};
use apka_core::machine::{init_run, parse_script, stair_summary, GameError, Pending, StepOutcome, Trace, TraceStatus};
use apka_core::syntax::{parse_hfl, typecheck, Dialect, TypingContext};
use apka_core::translate::{apka_to_hfl, hfl_to_apka};
use apka_core::trees::{distance, prefix_distance, Dir, PrefixTree, RegularTree, TreeError};
use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[derive(Parser)]
#[command(name = "apka", version, about = "Alternating parity Krivine automata and HFL over regular binary trees")]
struct Cli {
    /// Resource caps as `states=..,order=..,args=..,depth=..,domain=..`;
    /// applied on top of `APKA_CAPS`.
    #[arg(long, global = true)]
    caps: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Hfl,
    Apka,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Apka,
    Hfl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    Sigma,
    Pi,
}

#[derive(Subcommand)]
enum Command {
    /// Type an HFL formula or every state of an automaton.
    Typecheck {
        file: PathBuf,
        #[arg(long, value_enum)]
        dialect: DialectArg,
    },
    /// Check the well-formedness conditions of an automaton.
    Validate { apka: PathBuf },
    /// Write the dual automaton.
    Complement {
        apka: PathBuf,
        #[arg(short)]
        o: PathBuf,
    },
    /// Decide acceptance at a tree-state with the denotational semantics.
    Check {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long, conflicts_with = "apka", required_unless_present = "apka")]
        hfl: Option<PathBuf>,
        #[arg(long)]
        apka: Option<PathBuf>,
    },
    /// Play the acceptance game and dump the configurations.
    Simulate {
        #[arg(long)]
        apka: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Start node (defaults to the root).
        #[arg(long)]
        node: Option<String>,
        /// Whitespace-separated L/R choices.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        /// Prompt for choices once the script is used up.
        #[arg(long)]
        interactive: bool,
        /// Make random legal choices once the script is used up.
        #[arg(long, conflicts_with = "interactive")]
        random: bool,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Run the invariant monitors along the play.
        #[arg(long)]
        monitors: bool,
    },
    /// Translate between HFL formulas and automata.
    Translate {
        #[arg(long, value_enum)]
        to: Target,
        file: PathBuf,
        #[arg(short)]
        o: PathBuf,
    },
    /// Write the hard automaton of a level.
    GenHard {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        class: Class,
        #[arg(short)]
        o: PathBuf,
    },
    /// Write a prefix of the tree encoding the acceptance game.
    Encode {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        apka: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(short)]
        o: PathBuf,
    },
    /// Iterate the encoding towards its fixpoint tree.
    Fixpoint {
        #[arg(long)]
        apka: PathBuf,
        #[arg(long)]
        seed: PathBuf,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(short)]
        o: PathBuf,
    },
    /// Distance between two trees or prefixes.
    Distance {
        p1: PathBuf,
        p2: PathBuf,
        #[arg(long, default_value_t = 32)]
        cap: usize,
    },
}

enum Failure {
    False,
    Input(String),
    Cap(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::False => 1,
            Failure::Input(_) => 3,
            Failure::Cap(_) => 4,
        }
    }
}

impl From<DenotError> for Failure {
    fn from(e: DenotError) -> Self {
        match e {
            DenotError::CapExceeded(_) => Failure::Cap(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<TreeError> for Failure {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::DepthCap { .. } => Failure::Cap(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<HierarchyError> for Failure {
    fn from(e: HierarchyError) -> Self {
        match e {
            HierarchyError::Tree(t) => t.into(),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn input<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn load_apka(path: &Path) -> Result<Apka, Failure> {
    Apka::parse(&read(path)?).map_err(input(path))
}

fn load_tree(path: &Path) -> Result<RegularTree, Failure> {
    RegularTree::parse(&read(path)?).map_err(input(path))
}

fn verdict(b: bool) -> Outcome {
    println!("{b}");
    if b {
        Ok(())
    } else {
        Err(Failure::False)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let caps = Caps::from_env().and_then(|c| match &cli.caps {
        Some(s) => c.with_overrides(s),
        None => Ok(c),
    });
    let caps = match caps {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command, &caps) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::False => {}
                Failure::Input(m) | Failure::Cap(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command, caps: &Caps) -> Outcome {
    match command {
        Command::Typecheck { file, dialect } => match dialect {
            DialectArg::Hfl => {
                let f = parse_hfl(&read(&file)?).map_err(input(&file))?;
                match typecheck(&TypingContext::new(), &f, Dialect::Hfl) {
                    Ok(t) => {
                        println!("{t}");
                        Ok(())
                    }
                    Err(e) => {
                        eprintln!("{e}");
                        Err(Failure::False)
                    }
                }
            }
            DialectArg::Apka => {
                let a = load_apka(&file)?;
                let report = a.validate();
                for s in &a.states {
                    println!("{} : {}", s.name, s.ty);
                }
                if report.is_empty() {
                    Ok(())
                } else {
                    eprintln!("{report}");
                    Err(Failure::False)
                }
            }
        },
        Command::Validate { apka } => {
            let a = load_apka(&apka)?;
            let report = a.validate();
            if report.is_empty() {
                let d = a.descriptor();
                println!("valid: {} priorities, max parity {}, order {}", d.index, d.max_parity, d.order);
                Ok(())
            } else {
                println!("{report}");
                Err(Failure::False)
            }
        }
        Command::Complement { apka, o } => {
            let a = load_apka(&apka)?;
            write(&o, &a.complement().serialize())
        }
        Command::Check { tree, node, hfl, apka } => {
            let t = load_tree(&tree)?;
            let n = t.index_of(&node).ok_or_else(|| Failure::Input(format!("unknown tree-state `{node}`")))?;
            let b = match (hfl, apka) {
                (Some(f), _) => check_hfl(&t, n, &parse_hfl(&read(&f)?).map_err(input(&f))?, caps)?,
                (None, Some(a)) => check_apka(&t, n, &load_apka(&a)?, caps)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            verdict(b)
        }
        Command::Simulate { apka, tree, node, script, max_steps, interactive, random, rng_seed, monitors } => {
            let a = load_apka(&apka)?;
            let t = load_tree(&tree)?;
            let start = match node {
                Some(n) => Some(t.index_of(&n).ok_or_else(|| Failure::Input(format!("unknown tree-state `{n}`")))?),
                None => None,
            };
            let script = match script {
                Some(p) => parse_script(&read(&p)?).map_err(input(&p))?,
                None => Vec::new(),
            };
            simulate(&a, t, start, &script, max_steps, interactive, random.then_some(rng_seed), monitors)
        }
        Command::Translate { to, file, o } => match to {
            Target::Apka => {
                let f = parse_hfl(&read(&file)?).map_err(input(&file))?;
                let a = hfl_to_apka(&f).map_err(input(&file))?;
                write(&o, &a.serialize())
            }
            Target::Hfl => {
                let a = load_apka(&file)?;
                let f = apka_to_hfl(&a).map_err(input(&file))?;
                write(&o, &format!("{f}\n"))
            }
        },
        Command::GenHard { n, class, o } => {
            let flavor = match class {
                Class::Sigma => Flavor::Sigma,
                Class::Pi => Flavor::Pi,
            };
            let a = gen_hard(n, flavor).map_err(|e| Failure::Input(e.to_string()))?;
            write(&o, &a.serialize())
        }
        Command::Encode { tree, apka, depth, o } => {
            let p = encode_prefix(load_tree(&tree)?, &load_apka(&apka)?, depth, caps)?;
            write(&o, &format!("{}\n", p.serialize()))
        }
        Command::Fixpoint { apka, seed, iters, depth, o } => {
            let (p, report) = banach_iterate(&load_apka(&apka)?, &load_tree(&seed)?, iters, depth, caps)?;
            println!("{report}");
            write(&o, &format!("{}\n", p.serialize()))
        }
        Command::Distance { p1, p2, cap } => {
            let d = match (load_prefix(&p1)?, load_prefix(&p2)?) {
                (Loaded::Prefix(a), Loaded::Prefix(b)) => prefix_distance(&a, &b, cap)?,
                (Loaded::Tree(mut a), Loaded::Tree(mut b)) => distance(&mut a, &mut b, cap)?,
                (Loaded::Tree(mut a), Loaded::Prefix(b)) | (Loaded::Prefix(b), Loaded::Tree(mut a)) => {
                    let pa = apka_core::trees::prefix(&mut a, b.depth, caps)?;
                    prefix_distance(&pa, &b, cap)?
                }
            };
            println!("{d}");
            Ok(())
        }
    }
}

enum Loaded {
    Prefix(PrefixTree),
    Tree(RegularTree),
}

fn load_prefix(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with('(') {
        PrefixTree::parse(&text).map(Loaded::Prefix).map_err(input(path))
    } else {
        RegularTree::parse(&text).map(Loaded::Tree).map_err(input(path))
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    a: &Apka,
    t: RegularTree,
    start: Option<u32>,
    script: &[Dir],
    max_steps: usize,
    interactive: bool,
    random: Option<u64>,
    monitors: bool,
) -> Outcome {
    let mut g = init_run(a, t, start)?;
    if monitors {
        g.monitor(1);
    }
    let mut trace = g.run_script(script, max_steps)?;
    if trace.status == TraceStatus::NeedsChoice && (interactive || random.is_some()) {
        let mut rng = StdRng::seed_from_u64(random.unwrap_or(0));
        let stdin = io::stdin();
        let mut lines = stdin.lock().lines();
        loop {
            if trace.entries.len() >= max_steps {
                break;
            }
            let choice = match g.peek() {
                StepOutcome::ExistsWins(_) | StepOutcome::ForallWins(_) => break,
                StepOutcome::Deterministic => None,
                StepOutcome::ExistsChoice { options } | StepOutcome::ForallChoice { options } if interactive => {
                    let player = match g.pending() {
                        Pending::Choice { player, .. } => player,
                        _ => unreachable!(),
                    };
                    let Some(d) = prompt(&format!("{player}? [{}] [{}] ", options[0], options[1]), &mut lines) else {
                        break;
                    };
                    Some(d)
                }
                _ => g.legal_random_choice(&mut rng),
            };
            g.step(choice)?;
            trace = g.trace_snapshot(TraceStatus::NeedsChoice);
        }
        let status = match g.pending() {
            Pending::Won { winner, reason } => TraceStatus::Won { winner, reason },
            _ if trace.entries.len() >= max_steps => TraceStatus::MaxSteps,
            _ => TraceStatus::NeedsChoice,
        };
        trace = g.trace_snapshot(status);
    }
    print_trace(&trace);
    if let Some(r) = g.monitor_report() {
        println!("monitors: {r}");
    }
    println!("{}", stair_summary(&trace, trace.entries.len() / 2));
    Ok(())
}

fn prompt(text: &str, lines: &mut impl Iterator<Item = io::Result<String>>) -> Option<Dir> {
    loop {
        print!("{text}");
        io::stdout().flush().ok();
        let line = lines.next()?.ok()?;
        match line.trim() {
            "L" | "l" => return Some(Dir::Left),
            "R" | "r" => return Some(Dir::Right),
            "q" | "quit" => return None,
            _ => println!("answer L, R or q"),
        }
    }
}

fn print_trace(trace: &Trace) {
    for (i, e) in trace.entries.iter().enumerate() {
        println!("{} | {}", trace.dump_line(i), trace.table.formula(e.config.current.formula));
    }
    match &trace.status {
        TraceStatus::Won { winner, reason } => println!("{winner} wins: {reason}"),
        TraceStatus::NeedsChoice => println!("stopped: choice needed"),
        TraceStatus::MaxSteps => println!("stopped: step limit"),
    }
}
