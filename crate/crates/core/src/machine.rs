//! The acceptance game: configurations `(t, (Q,e), e', Γ, Δ)`, the
//! environment arena, the transition rules, run monitors, the stair-parity
//! summary and round tracking for the hard automata.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::apka::{Apka, Compiled, InvalidApka, Parity, QId, QKind};
use crate::hierarchy::Flavor;
use crate::syntax::SimpleType;
use crate::trees::{Dir, LazyTree, NodeRef};

pub type EnvId = u32;

/// The empty environment.
pub const E0: EnvId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Closure {
    pub formula: QId,
    pub env: EnvId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Env {
    pub parent: Option<EnvId>,
    /// State whose occurrence created this environment (`None` for `e0`).
    pub creator: Option<usize>,
    pub creation_step: u64,
    /// `bindings[j]` is the closure bound to the `j`-th lambda variable.
    pub bindings: Vec<Closure>,
    pub closed_at: Option<u64>,
    /// Length of the parent chain; 0 for `e0`.
    pub depth: u32,
}

/// Append-only store of environments. Environments are never removed, so
/// monitors can inspect the full history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvArena {
    envs: Vec<Env>,
}

impl Default for EnvArena {
    fn default() -> Self {
        Self::new()
    }
}

impl EnvArena {
    pub fn new() -> Self {
        EnvArena {
            envs: vec![Env { parent: None, creator: None, creation_step: 0, bindings: Vec::new(), closed_at: None, depth: 0 }],
        }
    }

    pub fn get(&self, e: EnvId) -> &Env {
        &self.envs[e as usize]
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn create(&mut self, parent: EnvId, creator: usize, step: u64, bindings: Vec<Closure>) -> EnvId {
        let id = self.envs.len() as EnvId;
        let depth = self.get(parent).depth + 1;
        self.envs.push(Env { parent: Some(parent), creator: Some(creator), creation_step: step, bindings, closed_at: None, depth });
        id
    }

    fn close(&mut self, e: EnvId, step: u64) {
        let env = &mut self.envs[e as usize];
        if env.closed_at.is_none() {
            env.closed_at = Some(step);
        }
    }

    /// `true` if `anc` is `e` or one of its predecessors.
    pub fn is_ancestor_or_self(&self, anc: EnvId, e: EnvId) -> bool {
        let target = self.get(anc).depth;
        let mut cur = e;
        while self.get(cur).depth > target {
            match self.get(cur).parent {
                Some(p) => cur = p,
                None => return false,
            }
        }
        cur == anc
    }

    /// `e` followed by all its predecessors, ending with `e0`.
    pub fn chain(&self, e: EnvId) -> Vec<EnvId> {
        let mut out = vec![e];
        let mut cur = e;
        while let Some(p) = self.get(cur).parent {
            out.push(p);
            cur = p;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrioEntry {
    pub priority: u32,
    pub owner: EnvId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub node: NodeRef,
    /// Level of `node` in the input tree.
    pub depth: u32,
    pub current: Closure,
    pub computing: EnvId,
    /// Argument stack, top = last.
    pub args: Vec<Closure>,
    /// Priority stack, top = last.
    pub prios: Vec<PrioEntry>,
}

impl Config {
    pub fn priority_digits(&self) -> String {
        digits(self.prios.iter().map(|p| p.priority))
    }
}

/// Priorities printed as a digit string (comma-separated if any exceeds 9).
pub fn digits(prios: impl Iterator<Item = u32> + Clone) -> String {
    if prios.clone().all(|p| p < 10) {
        prios.map(|p| char::from_digit(p, 10).unwrap()).collect()
    } else {
        prios.map(|p| p.to_string()).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Exists,
    Forall,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Exists => write!(f, "∃"),
            Player::Forall => write!(f, "∀"),
        }
    }
}

/// Side effect of one transition on the environment arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    None,
    Created(EnvId),
    Closed(EnvId),
}

/// What the current configuration demands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pending {
    Deterministic,
    Choice { player: Player, modal: bool },
    Won { winner: Player, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error(transparent)]
    Invalid(#[from] InvalidApka),
    #[error("proposition `{0}` is not declared by the tree")]
    UnknownProposition(String),
    #[error("unknown start node `{0}`")]
    UnknownStart(String),
    #[error("a choice is required at step {0}")]
    ChoiceMissing(u64),
    #[error("no choice is possible at step {0}")]
    ChoiceSuperfluous(u64),
    #[error("the game is already decided at step {0}")]
    Finished(u64),
}

/// The transition rules, independent of who stores the configurations.
#[derive(Debug, Clone)]
pub struct Machine {
    pub table: Arc<Compiled>,
    /// Automaton proposition index to tree proposition index.
    prop_map: Vec<usize>,
}

impl Machine {
    pub fn new(a: &Apka, tree_props: &[String]) -> Result<Machine, GameError> {
        let table = Compiled::new(a)?;
        Machine::from_table(table, tree_props)
    }

    pub fn from_table(table: Arc<Compiled>, tree_props: &[String]) -> Result<Machine, GameError> {
        let prop_map = table
            .apka
            .props
            .iter()
            .map(|p| tree_props.iter().position(|q| q == p).ok_or_else(|| GameError::UnknownProposition(p.clone())))
            .collect::<Result<_, _>>()?;
        Ok(Machine { table, prop_map })
    }

    pub fn initial(&self, node: NodeRef) -> Config {
        Config {
            node,
            depth: 0,
            current: Closure { formula: self.table.state_node[self.table.init], env: E0 },
            computing: E0,
            args: Vec::new(),
            prios: Vec::new(),
        }
    }

    pub fn kind(&self, c: &Closure) -> &QKind {
        &self.table.node(c.formula).kind
    }

    pub fn ty(&self, c: &Closure) -> &SimpleType {
        &self.table.node(c.formula).ty
    }

    /// Truth of a literal-like node at a tree node, `None` for other kinds.
    pub fn literal_value<T: LazyTree + ?Sized>(&self, q: QId, node: NodeRef, tree: &mut T) -> Option<bool> {
        match self.table.node(q).kind {
            QKind::True => Some(true),
            QKind::False => Some(false),
            QKind::Lit { prop, negated } => Some(tree.label(node).contains(self.prop_map[prop]) != negated),
            _ => None,
        }
    }

    pub fn pending<T: LazyTree + ?Sized>(&self, cfg: &Config, tree: &mut T) -> Pending {
        let q = cfg.current.formula;
        match self.table.node(q).kind {
            QKind::Or(..) => Pending::Choice { player: Player::Exists, modal: false },
            QKind::And(..) => Pending::Choice { player: Player::Forall, modal: false },
            QKind::Diamond(_) => Pending::Choice { player: Player::Exists, modal: true },
            QKind::Box(_) => Pending::Choice { player: Player::Forall, modal: true },
            QKind::True | QKind::False | QKind::Lit { .. } => {
                let holds = self.literal_value(q, cfg.node, tree).unwrap();
                let text = self.table.formula(q).to_string();
                let name = tree.node_name(cfg.node);
                if holds {
                    Pending::Won { winner: Player::Exists, reason: format!("{text} holds at {name}") }
                } else {
                    Pending::Won { winner: Player::Forall, reason: format!("{text} fails at {name}") }
                }
            }
            _ => Pending::Deterministic,
        }
    }

    /// Applies one transition. `choice` must be given exactly at choice nodes.
    pub fn advance<T: LazyTree + ?Sized>(
        &self,
        cfg: &Config,
        choice: Option<Dir>,
        arena: &mut EnvArena,
        tree: &mut T,
        step: u64,
    ) -> Result<(Config, Effect), GameError> {
        let cur = cfg.current;
        let kind = self.table.node(cur.formula).kind.clone();
        let needs_choice = matches!(kind, QKind::Or(..) | QKind::And(..) | QKind::Diamond(_) | QKind::Box(_));
        match (needs_choice, choice) {
            (true, None) => return Err(GameError::ChoiceMissing(step)),
            (false, Some(_)) if !matches!(kind, QKind::True | QKind::False | QKind::Lit { .. }) => {
                return Err(GameError::ChoiceSuperfluous(step))
            }
            _ => {}
        }
        let mut next = cfg.clone();
        let mut effect = Effect::None;
        match kind {
            QKind::StateRef(x) => {
                let n = self.table.apka.states[x].args.len();
                let keep = next.args.len().saturating_sub(n);
                let bindings: Vec<Closure> = next.args[keep..].iter().rev().copied().collect();
                next.args.truncate(keep);
                let e = arena.create(cfg.computing, x, step + 1, bindings);
                next.current = Closure { formula: self.table.body_root[x], env: e };
                next.computing = e;
                next.prios.push(PrioEntry { priority: self.table.priority(x), owner: e });
                effect = Effect::Created(e);
            }
            QKind::App(l, r) => {
                next.args.push(Closure { formula: r, env: cur.env });
                next.current = Closure { formula: l, env: cur.env };
            }
            QKind::Arg { index, .. } => {
                let bound = arena.get(cur.env).bindings[index];
                if self.table.node(cur.formula).ty.is_ground() && bound.env != cfg.computing {
                    let parent = arena.get(cfg.computing).parent.expect("closing the empty environment");
                    arena.close(cfg.computing, step + 1);
                    effect = Effect::Closed(cfg.computing);
                    next.computing = parent;
                    next.prios.pop();
                } else {
                    next.current = bound;
                }
            }
            QKind::Or(l, r) | QKind::And(l, r) => {
                let target = if choice == Some(Dir::Left) { l } else { r };
                next.current = Closure { formula: target, env: cur.env };
            }
            QKind::Diamond(c) | QKind::Box(c) => {
                next.node = tree.child(cfg.node, choice.unwrap());
                next.depth += 1;
                next.current = Closure { formula: c, env: cur.env };
            }
            QKind::True | QKind::False | QKind::Lit { .. } => return Err(GameError::Finished(step)),
        }
        Ok((next, effect))
    }

    /// `true` if reaching `q` lets `player` win on the spot.
    fn immediate_win<T: LazyTree + ?Sized>(&self, q: QId, node: NodeRef, tree: &mut T, player: Player) -> bool {
        if let Some(v) = self.literal_value(q, node, tree) {
            return v == (player == Player::Exists);
        }
        match (self.table.node(q).kind.clone(), player) {
            (QKind::Or(l, r), Player::Exists) | (QKind::And(l, r), Player::Forall) => {
                self.immediate_win(l, node, tree, player) || self.immediate_win(r, node, tree, player)
            }
            (QKind::Or(l, r), Player::Forall) | (QKind::And(l, r), Player::Exists) => {
                self.immediate_win(l, node, tree, player) && self.immediate_win(r, node, tree, player)
            }
            _ => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Game state and traces

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Deterministic,
    ExistsChoice { options: [String; 2] },
    ForallChoice { options: [String; 2] },
    ExistsWins(String),
    ForallWins(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: u64,
    pub node_name: String,
    pub config: Config,
    /// Effect of the transition that produced this configuration.
    pub effect: Effect,
    /// Choice made to produce this configuration.
    pub choice: Option<Dir>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStatus {
    Won { winner: Player, reason: String },
    NeedsChoice,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub table: Arc<Compiled>,
    pub entries: Vec<TraceEntry>,
    pub status: TraceStatus,
    /// Arena as it stood at the end of the trace.
    pub arena: EnvArena,
}

impl Trace {
    /// `step<k> | node=<s> depth=<d> | Q=q<id> | env=e<i> comp=e<j> | |G|=<n> | D=<digits>`
    pub fn dump_line(&self, i: usize) -> String {
        let e = &self.entries[i];
        let c = &e.config;
        format!(
            "step{} | node={} depth={} | Q=q{} | env=e{} comp=e{} | |G|={} | D={}",
            e.step,
            e.node_name,
            c.depth,
            c.current.formula,
            c.current.env,
            c.computing,
            c.args.len(),
            c.priority_digits()
        )
    }

    pub fn dump(&self) -> String {
        (0..self.entries.len()).map(|i| self.dump_line(i) + "\n").collect()
    }

    /// `(tree level, current formula, |Γ|, Δ)` per configuration.
    pub fn projection(&self) -> Vec<(u32, String, usize, String)> {
        self.entries
            .iter()
            .map(|e| {
                let c = &e.config;
                (c.depth, self.table.formula(c.current.formula).to_string(), c.args.len(), c.priority_digits())
            })
            .collect()
    }
}

/// One run of the acceptance game over a (possibly lazy) tree.
pub struct GameState<T: LazyTree> {
    pub machine: Machine,
    pub tree: T,
    pub config: Config,
    pub arena: EnvArena,
    pub step: u64,
    recording: bool,
    trace: Vec<TraceEntry>,
    monitor: Option<Monitor>,
}

impl<T: LazyTree> GameState<T> {
    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn pending(&mut self) -> Pending {
        self.machine.pending(&self.config, &mut self.tree)
    }

    pub fn peek(&mut self) -> StepOutcome {
        match self.pending() {
            Pending::Deterministic => StepOutcome::Deterministic,
            Pending::Won { winner: Player::Exists, reason } => StepOutcome::ExistsWins(reason),
            Pending::Won { winner: Player::Forall, reason } => StepOutcome::ForallWins(reason),
            Pending::Choice { player, modal } => {
                let options = if modal {
                    let n = self.config.node;
                    let l = self.tree.child(n, Dir::Left);
                    let r = self.tree.child(n, Dir::Right);
                    [format!("L: {}", self.tree.node_name(l)), format!("R: {}", self.tree.node_name(r))]
                } else {
                    let (l, r) = match self.machine.kind(&self.config.current) {
                        QKind::Or(l, r) | QKind::And(l, r) => (*l, *r),
                        _ => unreachable!(),
                    };
                    let t = &self.machine.table;
                    [format!("L: {}", t.formula(l)), format!("R: {}", t.formula(r))]
                };
                match player {
                    Player::Exists => StepOutcome::ExistsChoice { options },
                    Player::Forall => StepOutcome::ForallChoice { options },
                }
            }
        }
    }

    pub fn is_finished(&mut self) -> bool {
        matches!(self.pending(), Pending::Won { .. })
    }

    /// Turns on trace recording; the current configuration becomes the first entry.
    pub fn record(&mut self) {
        self.recording = true;
        self.trace.clear();
        self.push_entry(Effect::None, None);
    }

    /// Turns on online invariant monitoring. The full priority-stack check
    /// runs every `full_every` steps; the others run on every step.
    pub fn monitor(&mut self, full_every: u64) {
        self.monitor = Some(Monitor::new(self.machine.table.clone(), full_every));
    }

    pub fn monitor_report(&self) -> Option<MonitorReport> {
        self.monitor.as_ref().map(|m| m.report(&self.arena))
    }

    fn push_entry(&mut self, effect: Effect, choice: Option<Dir>) {
        let node_name = self.tree.node_name(self.config.node);
        self.trace.push(TraceEntry { step: self.step, node_name, config: self.config.clone(), effect, choice });
    }

    /// Advances by one transition and describes the new configuration.
    pub fn step(&mut self, choice: Option<Dir>) -> Result<StepOutcome, GameError> {
        self.step_effect(choice)?;
        Ok(self.peek())
    }

    /// Advances by one transition and returns its arena effect.
    pub fn step_effect(&mut self, choice: Option<Dir>) -> Result<Effect, GameError> {
        if self.is_finished() {
            return Err(GameError::Finished(self.step));
        }
        let prev = PrevSummary::of(&self.config);
        let (next, effect) = self.machine.advance(&self.config, choice, &mut self.arena, &mut self.tree, self.step)?;
        self.config = next;
        self.step += 1;
        if let Some(m) = &mut self.monitor {
            m.observe(self.step, Some(&prev), &self.config, effect, &self.arena);
        }
        if self.recording {
            self.push_entry(effect, choice);
        }
        Ok(effect)
    }

    /// A random choice that never hands the opponent an immediate win when
    /// an alternative exists; modal choices are uniform.
    pub fn legal_random_choice<R: Rng>(&mut self, rng: &mut R) -> Option<Dir> {
        let Pending::Choice { player, modal } = self.pending() else {
            return None;
        };
        let random = if rng.gen_bool(0.5) { Dir::Left } else { Dir::Right };
        if modal {
            return Some(random);
        }
        let (l, r) = match self.machine.kind(&self.config.current) {
            QKind::Or(l, r) | QKind::And(l, r) => (*l, *r),
            _ => unreachable!(),
        };
        let opponent = match player {
            Player::Exists => Player::Forall,
            Player::Forall => Player::Exists,
        };
        let node = self.config.node;
        let bad_l = self.machine.immediate_win(l, node, &mut self.tree, opponent);
        let bad_r = self.machine.immediate_win(r, node, &mut self.tree, opponent);
        Some(match (bad_l, bad_r) {
            (false, true) => Dir::Left,
            (true, false) => Dir::Right,
            _ => random,
        })
    }

    /// Plays deterministic steps automatically and consumes one script token
    /// per choice point, until the game ends, the script runs out at a
    /// choice, or `max_steps` configurations have been recorded.
    pub fn run_script(&mut self, script: &[Dir], max_steps: usize) -> Result<Trace, GameError> {
        if !self.recording {
            self.record();
        }
        let mut tokens = script.iter();
        let status = loop {
            if self.trace.len() >= max_steps {
                break TraceStatus::MaxSteps;
            }
            match self.pending() {
                Pending::Won { winner, reason } => break TraceStatus::Won { winner, reason },
                Pending::Deterministic => {
                    self.step_effect(None)?;
                }
                Pending::Choice { .. } => match tokens.next() {
                    Some(d) => {
                        self.step_effect(Some(*d))?;
                    }
                    None => break TraceStatus::NeedsChoice,
                },
            }
        };
        Ok(self.trace_snapshot(status))
    }

    pub fn trace_snapshot(&self, status: TraceStatus) -> Trace {
        Trace { table: self.machine.table.clone(), entries: self.trace.clone(), status, arena: self.arena.clone() }
    }
}

/// Initial configuration `(start, (X_init, e0), e0, ε, ε)`.
pub fn init_run<T: LazyTree>(a: &Apka, mut tree: T, start: Option<NodeRef>) -> Result<GameState<T>, GameError> {
    let machine = Machine::new(a, tree.props())?;
    let node = match start {
        Some(n) => n,
        None => tree.root(),
    };
    Ok(GameState {
        config: machine.initial(node),
        machine,
        tree,
        arena: EnvArena::new(),
        step: 0,
        recording: false,
        trace: Vec::new(),
        monitor: None,
    })
}

/// Parses whitespace-separated `L`/`R` tokens with `//` comments.
pub fn parse_script(text: &str) -> Result<Vec<Dir>, String> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split("//").next().unwrap_or("");
        for tok in line.split_whitespace() {
            match tok {
                "L" | "l" => out.push(Dir::Left),
                "R" | "r" => out.push(Dir::Right),
                other => return Err(format!("line {}: expected L or R, found `{other}`", ln + 1)),
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Monitors

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Invariant {
    /// The current closure's environment is the computing one or a predecessor.
    CurrentEnvOnChain,
    /// A new environment binds only closures over its strict predecessors.
    BindingsOnChain,
    /// Closures on the argument stack live on the current closure's chain.
    StackOnChain,
    /// The priority stack is exactly the priorities of the computing chain.
    PriorityStack,
    StackTyping,
    OrderMonotone,
    ReturnInSubformula,
    ReentryBound,
    ClosedNeverComputing,
    PopIffClose,
    OccurrenceBijection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorViolation {
    pub step: u64,
    pub invariant: Invariant,
    pub detail: String,
}

impl fmt::Display for MonitorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {:?}: {}", self.step, self.invariant, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MonitorReport {
    pub steps_checked: u64,
    /// Configurations right after a close, where the current closure's
    /// environment is the closed one and only its binding is on the chain.
    pub post_close_configs: u64,
    pub violations: Vec<MonitorViolation>,
}

impl MonitorReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for MonitorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} steps checked, {} post-close configurations, {} violations",
            self.steps_checked,
            self.post_close_configs,
            self.violations.len()
        )?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

/// What the monitor needs to know about the previous configuration.
#[derive(Debug, Clone, Copy)]
pub struct PrevSummary {
    pub current: Closure,
    pub computing: EnvId,
    pub prio_len: usize,
    pub top: Option<PrioEntry>,
}

impl PrevSummary {
    pub fn of(c: &Config) -> Self {
        PrevSummary { current: c.current, computing: c.computing, prio_len: c.prios.len(), top: c.prios.last().copied() }
    }
}

const MAX_REPORTED: usize = 64;

pub struct Monitor {
    table: Arc<Compiled>,
    full_every: u64,
    steps: u64,
    violations: Vec<MonitorViolation>,
    last_ground: BTreeMap<EnvId, QId>,
    anchor: BTreeMap<EnvId, QId>,
    returning_to: Option<EnvId>,
    reentries: BTreeMap<EnvId, u32>,
    created: u64,
    post_close_configs: u64,
}

impl Monitor {
    pub fn new(table: Arc<Compiled>, full_every: u64) -> Self {
        Monitor {
            table,
            full_every: full_every.max(1),
            steps: 0,
            violations: Vec::new(),
            last_ground: BTreeMap::new(),
            anchor: BTreeMap::new(),
            returning_to: None,
            reentries: BTreeMap::new(),
            created: 0,
            post_close_configs: 0,
        }
    }

    fn fail(&mut self, step: u64, invariant: Invariant, detail: String) {
        if self.violations.len() < MAX_REPORTED {
            self.violations.push(MonitorViolation { step, invariant, detail });
        }
    }

    pub fn report(&self, arena: &EnvArena) -> MonitorReport {
        let mut violations = self.violations.clone();
        if arena.len() as u64 != self.created + 1 && violations.len() < MAX_REPORTED {
            violations.push(MonitorViolation {
                step: self.steps,
                invariant: Invariant::OccurrenceBijection,
                detail: format!("{} environments besides e0 but {} state occurrences", arena.len() - 1, self.created),
            });
        }
        MonitorReport { steps_checked: self.steps, post_close_configs: self.post_close_configs, violations }
    }

    /// Checks configuration `cfg` reached at `step` by a transition with `effect`.
    pub fn observe(&mut self, step: u64, prev: Option<&PrevSummary>, cfg: &Config, effect: Effect, arena: &EnvArena) {
        self.steps += 1;
        let t = self.table.clone();
        let cur = cfg.current;
        let cur_ty = &t.node(cur.formula).ty;

        if !arena.is_ancestor_or_self(cur.env, cfg.computing) {
            // Right after a close the current closure is a ground variable of
            // a closed environment; what must sit on the chain is its binding.
            let pending_return = match t.node(cur.formula).kind {
                QKind::Arg { index, .. } if cur_ty.is_ground() => {
                    let b = arena.get(cur.env).bindings[index];
                    arena.get(cur.env).closed_at.is_some_and(|s| s <= step) && arena.is_ancestor_or_self(b.env, cfg.computing)
                }
                _ => false,
            };
            if pending_return {
                self.post_close_configs += 1;
            } else {
                self.fail(step, Invariant::CurrentEnvOnChain, format!("e{} is not on the chain of e{}", cur.env, cfg.computing));
            }
        }
        for c in &cfg.args {
            if !arena.is_ancestor_or_self(c.env, cur.env) {
                self.fail(step, Invariant::StackOnChain, format!("stack closure over e{} not on the chain of e{}", c.env, cur.env));
            }
        }
        let expected = cur_ty.args();
        let typed = cfg.args.len() == expected.len()
            && expected.iter().enumerate().all(|(j, ty)| t.node(cfg.args[cfg.args.len() - 1 - j].formula).ty == *ty);
        if !typed {
            self.fail(step, Invariant::StackTyping, format!("closure of type {cur_ty} with {} stack entries of mismatching types", cfg.args.len()));
        }
        if let Some(at) = arena.get(cfg.computing).closed_at {
            if at <= step {
                self.fail(step, Invariant::ClosedNeverComputing, format!("e{} computed after closing at step {at}", cfg.computing));
            }
        }
        self.check_priority_stack(step, cfg, arena, prev.is_none() || step.is_multiple_of(self.full_every) || cfg.prios.len() <= 16);

        if let Some(p) = prev {
            let was_state = matches!(t.node(p.current.formula).kind, QKind::StateRef(_));
            match effect {
                Effect::Created(e) => {
                    self.created += 1;
                    if !was_state {
                        self.fail(step, Invariant::OccurrenceBijection, format!("e{e} created without a state occurrence"));
                    }
                    if cfg.prios.len() != p.prio_len + 1 || cfg.prios.last().map(|x| x.owner) != Some(e) {
                        self.fail(step, Invariant::PopIffClose, format!("creating e{e} did not push exactly its priority"));
                    }
                    for b in &arena.get(e).bindings {
                        if b.env == e || !arena.is_ancestor_or_self(b.env, e) {
                            self.fail(step, Invariant::BindingsOnChain, format!("e{e} binds a closure over e{}", b.env));
                        }
                    }
                    if let Some(&g) = self.last_ground.get(&p.computing) {
                        self.anchor.insert(p.computing, g);
                    } else {
                        self.anchor.remove(&p.computing);
                    }
                    self.returning_to = None;
                }
                Effect::Closed(e) => {
                    if was_state {
                        self.fail(step, Invariant::OccurrenceBijection, "state occurrence without a new environment".into());
                    }
                    let popped_ok = cfg.prios.len() + 1 == p.prio_len && p.top.map(|x| x.owner) == Some(e);
                    if !popped_ok || arena.get(e).closed_at.is_none() || p.computing != e {
                        self.fail(step, Invariant::PopIffClose, format!("closing e{e} does not match the popped priority"));
                    }
                    self.returning_to = Some(cfg.computing);
                }
                Effect::None => {
                    if was_state {
                        self.fail(step, Invariant::OccurrenceBijection, "state occurrence without a new environment".into());
                    }
                    if cfg.prios.len() != p.prio_len || cfg.prios.last() != p.top.as_ref() {
                        self.fail(step, Invariant::PopIffClose, "priority stack changed without an environment event".into());
                    }
                    if p.computing == cfg.computing && t.node(cur.formula).ty.order() < t.node(p.current.formula).ty.order() {
                        self.fail(
                            step,
                            Invariant::OrderMonotone,
                            format!("type order dropped from q{} to q{} inside e{}", p.current.formula, cur.formula, cfg.computing),
                        );
                    }
                    if let Some(r) = self.returning_to.take() {
                        if r == cfg.computing && cur.env == r {
                            self.check_return(step, r, cur.formula, arena);
                        }
                    }
                }
            }
        }
        if cur_ty.is_ground() && cur.env == cfg.computing {
            self.last_ground.insert(cur.env, cur.formula);
        }
    }

    fn check_return(&mut self, step: u64, e: EnvId, q: QId, arena: &EnvArena) {
        let t = self.table.clone();
        match self.anchor.get(&e).copied() {
            Some(a) if t.is_proper_subformula(q, a) && t.node(q).ty.is_ground() => {}
            Some(a) => self.fail(step, Invariant::ReturnInSubformula, format!("returned to e{e} at q{q}, not a ground proper subformula of q{a}")),
            None => self.fail(step, Invariant::ReturnInSubformula, format!("returned to e{e} without a departure point")),
        }
        let n = self.reentries.entry(e).or_insert(0);
        *n += 1;
        let count = *n;
        if let Some(x) = arena.get(e).creator {
            let bound = t.node(t.body_root[x]).size;
            if count > bound {
                self.fail(step, Invariant::ReentryBound, format!("e{e} re-entered {count} times, body size {bound}"));
            }
        }
    }

    fn check_priority_stack(&mut self, step: u64, cfg: &Config, arena: &EnvArena, full: bool) {
        let t = self.table.clone();
        let comp = arena.get(cfg.computing);
        if cfg.prios.len() != comp.depth as usize {
            self.fail(step, Invariant::PriorityStack, format!("{} priorities for a chain of length {}", cfg.prios.len(), comp.depth));
            return;
        }
        let entry_ok = |entry: &PrioEntry, e: EnvId| {
            entry.owner == e && arena.get(e).creator.map(|x| t.priority(x)) == Some(entry.priority)
        };
        if full {
            let chain = arena.chain(cfg.computing);
            let ok = chain.iter().rev().skip(1).zip(cfg.prios.iter()).all(|(&e, entry)| entry_ok(entry, e));
            if !ok {
                self.fail(step, Invariant::PriorityStack, format!("stack {} differs from the chain of e{}", cfg.priority_digits(), cfg.computing));
            }
        } else if let Some(top) = cfg.prios.last() {
            if !entry_ok(top, cfg.computing) {
                self.fail(step, Invariant::PriorityStack, format!("top priority not tied to e{}", cfg.computing));
            }
        }
    }
}

/// Replays a recorded trace through the monitor with full checks.
pub fn check_run_invariants(trace: &Trace) -> MonitorReport {
    let mut m = Monitor::new(trace.table.clone(), 1);
    let mut prev: Option<PrevSummary> = None;
    let mut created = 0u64;
    for e in &trace.entries {
        m.observe(e.step, prev.as_ref(), &e.config, e.effect, &trace.arena);
        if let Effect::Created(_) = e.effect {
            created += 1;
        }
        prev = Some(PrevSummary::of(&e.config));
    }
    let mut r = m.report(&trace.arena);
    // The arena may hold environments created after the trace ended only if
    // the trace is a snapshot of a longer run; the bijection check is then
    // restricted to environments created inside the window.
    let in_window = (1..trace.arena.len() as EnvId)
        .filter(|&e| trace.arena.get(e).creation_step <= trace.entries.last().map_or(0, |x| x.step))
        .count() as u64;
    r.violations.retain(|v| v.invariant != Invariant::OccurrenceBijection || v.step != m.steps);
    if in_window != created {
        r.violations.push(MonitorViolation {
            step: m.steps,
            invariant: Invariant::OccurrenceBijection,
            detail: format!("{in_window} environments created in the window but {created} state occurrences"),
        });
    }
    r
}

// ---------------------------------------------------------------------------
// Stair summary

/// Finite-window view of the stair parity condition. This is a heuristic
/// about a prefix of a play; it never decides the winner of an infinite play.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StairSummary {
    pub window: (u64, u64),
    /// Lowest stack height inside the window.
    pub min_height: usize,
    /// Entries below `min_height`: present throughout the window.
    pub stable_prefix: Vec<u32>,
    /// Entries pushed inside the window and still on the stack at its end.
    pub survivors: Vec<u32>,
    pub pushes: BTreeMap<u32, u64>,
    pub pops: BTreeMap<u32, u64>,
    /// Highest surviving priority: the guess for the limit maximum.
    pub candidate: Option<u32>,
    pub candidate_parity: Option<Parity>,
    /// Set when the trace ended in a terminal win.
    pub decided: Option<Player>,
    pub heuristic: bool,
}

impl fmt::Display for StairSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.decided {
            return write!(f, "stair summary: play decided, {p} wins");
        }
        write!(
            f,
            "stair summary (finite-window heuristic) steps {}..{}: min height {}, stable prefix {}, survivors {}, candidate {}",
            self.window.0,
            self.window.1,
            self.min_height,
            digits(self.stable_prefix.iter().copied()),
            digits(self.survivors.iter().copied()),
            match (self.candidate, self.candidate_parity) {
                (Some(c), Some(p)) => format!("{c} ({p})"),
                _ => "none".into(),
            }
        )
    }
}

pub fn stair_summary(trace: &Trace, suffix_start: usize) -> StairSummary {
    let decided = match &trace.status {
        TraceStatus::Won { winner, .. } => Some(*winner),
        _ => None,
    };
    let entries = &trace.entries;
    let start = suffix_start.min(entries.len().saturating_sub(1));
    let window = &entries[start..];
    let min_height = window.iter().map(|e| e.config.prios.len()).min().unwrap_or(0);
    let last = window.last().map(|e| e.config.prios.clone()).unwrap_or_default();
    let stable_prefix: Vec<u32> = last[..min_height].iter().map(|p| p.priority).collect();
    let survivors: Vec<u32> = last[min_height..].iter().map(|p| p.priority).collect();
    let mut pushes = BTreeMap::new();
    let mut pops = BTreeMap::new();
    for (i, e) in window.iter().enumerate().skip(1) {
        match e.effect {
            Effect::Created(_) => {
                if let Some(p) = e.config.prios.last() {
                    *pushes.entry(p.priority).or_insert(0) += 1;
                }
            }
            Effect::Closed(_) => {
                if let Some(p) = window[i - 1].config.prios.last() {
                    *pops.entry(p.priority).or_insert(0) += 1;
                }
            }
            Effect::None => {}
        }
    }
    let candidate = survivors.iter().copied().max();
    StairSummary {
        window: (window.first().map_or(0, |e| e.step), window.last().map_or(0, |e| e.step)),
        min_height,
        stable_prefix,
        survivors,
        pushes,
        pops,
        candidate,
        candidate_parity: candidate.map(Parity::of),
        decided,
        heuristic: true,
    }
}

// ---------------------------------------------------------------------------
// Rounds of the hard automata

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundKind {
    /// The unfolding of the initial state before the first round.
    Dummy,
    Plain,
    V,
    /// Round for label `F_k`.
    F(usize),
    /// Still running.
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub index: usize,
    pub kind: RoundKind,
    pub start_step: u64,
    pub end_step: Option<u64>,
    /// Environments created during the round, with their priorities.
    pub tied: Vec<(EnvId, u32)>,
    /// Tied environments not closed yet.
    pub live: Vec<(EnvId, u32)>,
    /// Priorities contributed when the round completed.
    pub p_sequence: Vec<u32>,
    saw_close: bool,
    first_x: Option<usize>,
}

impl RoundRecord {
    pub fn closed(&self) -> bool {
        self.live.is_empty()
    }
}

/// State indices of a hard automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardLayout {
    pub n: usize,
    pub flavor: Flavor,
    pub i_state: usize,
    pub o_state: usize,
    /// `x_state[i]` is the index of `X_i`.
    pub x_state: Vec<usize>,
    /// The `(O x0)` occurrences inside `δ(O)`.
    pub o_app: Vec<QId>,
}

impl HardLayout {
    pub fn from_table(t: &Compiled, n: usize, flavor: Flavor) -> Option<HardLayout> {
        let a = &t.apka;
        let i_state = a.state_index("I")?;
        let o_state = a.state_index("O")?;
        let x_state: Vec<usize> = (0..n).map(|i| a.state_index(&format!("X_{i}"))).collect::<Option<_>>()?;
        let o_arg = QKind::Arg { owner: o_state, index: 0 };
        let o_app = (0..t.state_node[0])
            .filter(|&q| t.node(q).state == o_state && matches!(t.node(q).kind, QKind::App(l, r) if t.node(l).kind == QKind::StateRef(o_state) && t.node(r).kind == o_arg))
            .collect();
        Some(HardLayout { n, flavor, i_state, o_state, x_state, o_app })
    }

    fn is_arg_of(&self, t: &Compiled, q: QId, state: usize) -> bool {
        t.node(q).kind == QKind::Arg { owner: state, index: 0 }
    }

    fn base(&self) -> u32 {
        match self.flavor {
            Flavor::Sigma => 0,
            Flavor::Pi => 1,
        }
    }

    /// `p(R)` for a completed round.
    pub fn p_sequence(&self, kind: RoundKind, t: &Compiled) -> Vec<u32> {
        match kind {
            RoundKind::Dummy => vec![t.priority(self.i_state)],
            RoundKind::Plain | RoundKind::V => vec![self.base()],
            RoundKind::F(k) => {
                let top = self.first_x_for_label(k);
                let mut out = vec![self.base()];
                out.extend((0..=top).rev().map(|i| t.priority(self.x_state[i])));
                out
            }
            RoundKind::Open => Vec::new(),
        }
    }

    /// Index `i` of the state `X_i` entered first in an `F_k` round.
    pub fn first_x_for_label(&self, k: usize) -> usize {
        match self.flavor {
            Flavor::Sigma => k,
            Flavor::Pi => k - 1,
        }
    }

    fn label_for_first_x(&self, i: usize) -> usize {
        match self.flavor {
            Flavor::Sigma => i,
            Flavor::Pi => i + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConformanceReport {
    pub boundaries_checked: u64,
    pub violations: Vec<String>,
}

impl ConformanceReport {
    pub fn is_conformant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Follows a play of a hard automaton round by round and checks the
/// stack/round correspondence at every round boundary.
pub struct RoundTracker {
    table: Arc<Compiled>,
    pub layout: HardLayout,
    pub rounds: Vec<RoundRecord>,
    pub report: ConformanceReport,
}

impl RoundTracker {
    pub fn new(table: Arc<Compiled>, layout: HardLayout) -> Self {
        let dummy = RoundRecord {
            index: 0,
            kind: RoundKind::Dummy,
            start_step: 0,
            end_step: None,
            tied: Vec::new(),
            live: Vec::new(),
            p_sequence: Vec::new(),
            saw_close: false,
            first_x: None,
        };
        RoundTracker { table, layout, rounds: vec![dummy], report: ConformanceReport::default() }
    }

    fn fail(&mut self, step: u64, msg: String) {
        if self.report.violations.len() < MAX_REPORTED {
            self.report.violations.push(format!("step {step}: {msg}"));
        }
    }

    fn last_live(&self) -> Option<EnvId> {
        self.rounds.iter().rev().find_map(|r| r.live.last().map(|x| x.0))
    }

    /// Feeds configuration `cfg` reached at `step` via `effect`. `inner`
    /// yields the inner automaton's priority stack at a tree node, when known.
    pub fn observe(
        &mut self,
        step: u64,
        cfg: &Config,
        effect: Effect,
        arena: &EnvArena,
        inner: &mut dyn FnMut(NodeRef) -> Option<Vec<u32>>,
    ) {
        let t = self.table.clone();
        match effect {
            Effect::Created(e) => self.on_created(step, e, arena),
            Effect::Closed(e) => {
                let top = self.last_live();
                if top != Some(e) {
                    self.fail(step, format!("closed e{e} but the last live environment is {top:?}"));
                }
                if let Some(r) = self.rounds.iter_mut().rev().find(|r| r.live.iter().any(|x| x.0 == e)) {
                    r.live.retain(|x| x.0 != e);
                }
                let cur = self.rounds.last_mut().unwrap();
                cur.saw_close = true;
            }
            Effect::None => {}
        }
        if t.node(cfg.current.formula).kind == QKind::StateRef(self.layout.o_state) {
            self.finish_round(step, &t);
            self.check_boundary(step, cfg, &t, inner);
            let index = self.rounds.len();
            self.rounds.push(RoundRecord {
                index,
                kind: RoundKind::Open,
                start_step: step,
                end_step: None,
                tied: Vec::new(),
                live: Vec::new(),
                p_sequence: Vec::new(),
                saw_close: false,
                first_x: None,
            });
        }
    }

    fn on_created(&mut self, step: u64, e: EnvId, arena: &EnvArena) {
        let env = arena.get(e).clone();
        let creator = env.creator.unwrap();
        let prio = self.table.priority(creator);
        let lay = self.layout.clone();
        let top = self.last_live();
        let cur_idx = self.rounds.len() - 1;
        if creator == lay.o_state {
            let b = env.bindings[0];
            let formula_ok = lay.is_arg_of(&self.table, b.formula, lay.o_state)
                || lay.is_arg_of(&self.table, b.formula, lay.x_state[0])
                || self.table.node(b.formula).kind == QKind::True;
            if !formula_ok {
                self.fail(step, format!("O environment e{e} binds x0 to q{}", b.formula));
            }
            if Some(b.env) != top || env.parent != top {
                self.fail(step, format!("O environment e{e} binds x0 over e{} instead of the last live environment {top:?}", b.env));
            }
        } else if let Some(i) = lay.x_state.iter().position(|&x| x == creator) {
            let b = env.bindings[0];
            let round = &self.rounds[cur_idx];
            match round.first_x {
                None => {
                    let o_env = round.tied.first().map(|x| x.0);
                    if !lay.o_app.contains(&b.formula) || Some(b.env) != o_env {
                        self.fail(step, format!("X_{i} environment e{e} does not bind (O x0) of its round"));
                    }
                    self.rounds[cur_idx].first_x = Some(i);
                }
                Some(_) => {
                    let prev = round.tied.last().map(|x| x.0);
                    let prev_is_next_x = i + 1 < lay.n && prev.and_then(|p| arena.get(p).creator) == Some(lay.x_state[i + 1]);
                    if !prev_is_next_x || !lay.is_arg_of(&self.table, b.formula, lay.x_state[i + 1]) || Some(b.env) != prev {
                        self.fail(step, format!("X_{i} environment e{e} does not chain to the previous X environment"));
                    }
                }
            }
        }
        let r = &mut self.rounds[cur_idx];
        r.tied.push((e, prio));
        r.live.push((e, prio));
    }

    fn finish_round(&mut self, step: u64, t: &Compiled) {
        let lay = self.layout.clone();
        let r = self.rounds.last_mut().unwrap();
        if r.kind == RoundKind::Dummy {
            r.end_step = Some(step);
            r.p_sequence = lay.p_sequence(RoundKind::Dummy, t);
            return;
        }
        r.end_step = Some(step);
        r.kind = match (r.first_x, r.saw_close) {
            (Some(i), _) => RoundKind::F(lay.label_for_first_x(i)),
            (None, true) => RoundKind::V,
            (None, false) => RoundKind::Plain,
        };
        r.p_sequence = lay.p_sequence(r.kind, t);
        let expected: Vec<u32> = r.tied.iter().map(|x| x.1).collect();
        let (kind, tied_ok) = (r.kind, expected == r.p_sequence || (r.kind == RoundKind::V && expected == r.p_sequence));
        if !tied_ok {
            let msg = format!("round {} ({kind:?}) tied priorities {:?}, expected {:?}", r.index, expected, r.p_sequence);
            self.fail(step, msg);
        }
    }

    fn check_boundary(&mut self, step: u64, cfg: &Config, t: &Compiled, inner: &mut dyn FnMut(NodeRef) -> Option<Vec<u32>>) {
        self.report.boundaries_checked += 1;
        let lay = self.layout.clone();
        let concat: Vec<PrioEntry> = self
            .rounds
            .iter()
            .flat_map(|r| r.live.iter().map(|&(owner, priority)| PrioEntry { priority, owner }))
            .collect();
        if concat != cfg.prios {
            let msg = format!(
                "priority stack {} is not the concatenation {} of live round sequences",
                cfg.priority_digits(),
                digits(concat.iter().map(|p| p.priority))
            );
            self.fail(step, msg);
        }
        let plain = lay.p_sequence(RoundKind::Plain, t);
        let mut full_f = Vec::new();
        let mut problems = Vec::new();
        for r in &self.rounds {
            let live: Vec<u32> = r.live.iter().map(|x| x.1).collect();
            let ok = match r.kind {
                RoundKind::Dummy => live.is_empty() || live == r.p_sequence,
                RoundKind::V => live.is_empty(),
                RoundKind::Plain => live.is_empty() || live == plain,
                RoundKind::F(k) => {
                    if live == r.p_sequence {
                        full_f.push(k as u32);
                    }
                    live.is_empty() || live == plain || live == r.p_sequence
                }
                RoundKind::Open => true,
            };
            if !ok {
                problems.push(format!("round {} ({:?}) has live priorities {:?}", r.index, r.kind, live));
            }
        }
        for p in problems {
            self.fail(step, p);
        }
        if let Some(inner_stack) = inner(cfg.node) {
            if inner_stack != full_f {
                let msg = format!("unclosed F rounds {full_f:?} differ from the inner priority stack {inner_stack:?}");
                self.fail(step, msg);
            }
        }
    }

    /// Completed rounds (everything but the dummy and the running one).
    pub fn completed_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| !matches!(r.kind, RoundKind::Dummy | RoundKind::Open)).count()
    }
}

/// Offline round analysis of a recorded trace of a hard automaton.
pub fn round_analysis(
    trace: &Trace,
    n: usize,
    flavor: Flavor,
    inner: &mut dyn FnMut(NodeRef) -> Option<Vec<u32>>,
) -> Option<(Vec<RoundRecord>, ConformanceReport)> {
    let layout = HardLayout::from_table(&trace.table, n, flavor)?;
    let mut tracker = RoundTracker::new(trace.table.clone(), layout);
    for e in &trace.entries {
        tracker.observe(e.step, &e.config, e.effect, &trace.arena, inner);
    }
    Some((tracker.rounds, tracker.report))
}
