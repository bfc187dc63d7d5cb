//! Hierarchy machinery: the label vocabularies, trees encoding acceptance
//! games, the hard automata of each alternation class and the iteration of
//! the encoding towards its unique fixpoint tree.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::apka::{Apka, Compiled, QKind, StateDecl};
use crate::caps::Caps;
use crate::machine::{Config, EnvArena, GameError, Machine, Pending};
use crate::syntax::{Formula, SimpleType};
use crate::trees::{prefix, prefix_distance, Dir, DyadicDistance, LabelSet, LazyTree, NodeRef, PrefixTree, RegularTree, TreeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Sigma,
    Pi,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::Sigma => write!(f, "sigma"),
            Flavor::Pi => write!(f, "pi"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("n must be at least 1")]
    BadN,
    #[error("priority {priority} of state {state} has no label in {vocab}")]
    PriorityOutOfVocabulary { state: String, priority: u32, vocab: String },
    #[error("tree propositions {found:?} are not the vocabulary {expected:?}")]
    NotOverVocabulary { expected: Vec<String>, found: Vec<String> },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// `{D,C,V,T,F,F_0..F_{n-1}}` for Sigma and `{D,C,V,T,F,F_1..F_n}` for Pi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HierarchyVocab {
    pub n: usize,
    pub flavor: Flavor,
}

pub const D: usize = 0;
pub const C: usize = 1;
pub const V: usize = 2;
pub const T: usize = 3;
pub const F: usize = 4;

impl HierarchyVocab {
    pub fn new(n: usize, flavor: Flavor) -> Result<Self, HierarchyError> {
        if n == 0 {
            return Err(HierarchyError::BadN);
        }
        Ok(HierarchyVocab { n, flavor })
    }

    /// Labels `F_k` available: `0..n` or `1..=n`.
    pub fn label_range(&self) -> std::ops::RangeInclusive<usize> {
        match self.flavor {
            Flavor::Sigma => 0..=self.n - 1,
            Flavor::Pi => 1..=self.n,
        }
    }

    pub fn props(&self) -> Vec<String> {
        let mut out: Vec<String> = ["D", "C", "V", "T", "F"].iter().map(|s| s.to_string()).collect();
        out.extend(self.label_range().map(|k| format!("F_{k}")));
        out
    }

    /// Index of `F_k` in [`props`](Self::props).
    pub fn f_index(&self, k: u32) -> Option<usize> {
        let k = k as usize;
        self.label_range().contains(&k).then(|| 5 + k - *self.label_range().start())
    }

    /// Sigma if some priority is 0 (labels `F_0..F_max`), Pi otherwise
    /// (labels `F_1..F_max`).
    pub fn infer(a: &Apka) -> Self {
        let prios = a.priorities();
        let max = prios.iter().copied().max().unwrap_or(0) as usize;
        if prios.contains(&0) || prios.is_empty() {
            HierarchyVocab { n: max + 1, flavor: Flavor::Sigma }
        } else {
            HierarchyVocab { n: max, flavor: Flavor::Pi }
        }
    }
}

impl fmt::Display for HierarchyVocab {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.flavor {
            Flavor::Sigma => write!(f, "P_{}", self.n),
            Flavor::Pi => write!(f, "P'_{}", self.n),
        }
    }
}

// ---------------------------------------------------------------------------
// Hard automata

/// The hard automaton of level `n` for `flavor`: states `I, O, X_{n-1}..X_0`.
pub fn gen_hard(n: usize, flavor: Flavor) -> Result<Apka, HierarchyError> {
    let vocab = HierarchyVocab::new(n, flavor)?;
    let pr = SimpleType::Ground;
    let pr_pr = SimpleType::arrow(SimpleType::Ground, SimpleType::Ground);
    let x0 = || Formula::var("x0");
    let o_x0 = || Formula::app(Formula::var("O"), x0());
    let (base, shift) = match flavor {
        Flavor::Sigma => (0, 0),
        Flavor::Pi => (1, 1),
    };
    // F_k sends the play through X_{first}, where first = k (Sigma) or k-1 (Pi)
    let mut conjuncts = vec![
        Formula::implies_prop("D", Formula::diamond(o_x0())),
        Formula::implies_prop("C", Formula::boxed(o_x0())),
        Formula::implies_prop("V", Formula::diamond(x0())),
    ];
    for k in vocab.label_range().rev() {
        let first = k - shift;
        let call = Formula::app(Formula::var(format!("X_{first}")), o_x0());
        conjuncts.push(Formula::implies_prop(format!("F_{k}"), Formula::diamond(call)));
    }
    let big = conjuncts.into_iter().rev().reduce(|acc, c| Formula::and(c, acc)).unwrap();
    let delta_o = Formula::and(Formula::neg_prop("F"), Formula::or(Formula::prop("T"), big));
    let mut states = vec![
        StateDecl { name: "I".into(), ty: pr, priority: base, args: vec![], body: Formula::app(Formula::var("O"), Formula::True) },
        StateDecl { name: "O".into(), ty: pr_pr.clone(), priority: base, args: vec![("x0".into(), SimpleType::Ground)], body: delta_o },
    ];
    for i in (0..n).rev() {
        let body = if i == 0 { o_x0() } else { Formula::app(Formula::var(format!("X_{}", i - 1)), x0()) };
        states.push(StateDecl {
            name: format!("X_{i}"),
            ty: pr_pr.clone(),
            priority: i as u32 + shift as u32,
            args: vec![("x0".into(), SimpleType::Ground)],
            body,
        });
    }
    Ok(Apka { props: vocab.props(), init: "I".into(), states })
}

/// Literal-free automata of order 1 whose priorities fit the vocabulary, so
/// their acceptance games never end and every label kind shows up.
pub fn inner_templates(n: usize, flavor: Flavor) -> Result<Vec<Apka>, HierarchyError> {
    let vocab = HierarchyVocab::new(n, flavor)?;
    let clamp = |p: u32| match flavor {
        Flavor::Sigma => p.min(n as u32 - 1),
        Flavor::Pi => p.min(n as u32 - 1) + 1,
    };
    let props = vocab.props().join(" ");
    let texts = [
        format!(
            "props {props}\ninit I\nstate I : Pr {{ prio {} ; body (X Y) }}\nstate X : Pr -> Pr {{ prio {} ; args x:Pr ; body (<> x) \\/ ([] Y) }}\nstate Y : Pr {{ prio {} ; body (X Y) }}\n",
            clamp(1),
            clamp(1),
            clamp(0)
        ),
        format!(
            "props {props}\ninit I\nstate I : Pr {{ prio {} ; body (Z W) }}\nstate Z : Pr -> Pr {{ prio {} ; args z:Pr ; body ([] z) /\\ (<> (Z (Z W))) }}\nstate W : Pr {{ prio {} ; body (<> W) \\/ (Z W) }}\n",
            clamp(0),
            clamp(2),
            clamp(1)
        ),
        format!(
            "props {props}\ninit I\nstate I : Pr {{ prio {} ; body ((X A) B) }}\nstate X : Pr -> Pr -> Pr {{ prio {} ; args x:Pr y:Pr ; body (<> ((X y) x)) \\/ ([] y) }}\nstate A : Pr {{ prio {} ; body (<> A) /\\ ((X B) A) }}\nstate B : Pr {{ prio {} ; body [] ((X A) A) }}\n",
            clamp(0),
            clamp(3),
            clamp(1),
            clamp(2)
        ),
    ];
    Ok(texts.iter().map(|t| Apka::parse(t).expect("template parses")).collect())
}

// ---------------------------------------------------------------------------
// Game-tree encoding

#[derive(Debug, Clone)]
struct GNode {
    config: Config,
    label: usize,
    children: Option<[NodeRef; 2]>,
}

/// The tree encoding the acceptance game of an automaton over an inner
/// tree, generated on demand. Nodes are memoized per path; deterministic
/// and terminal positions share one child entry.
pub struct GameTreeHandle<T: LazyTree> {
    machine: Machine,
    inner: T,
    arena: EnvArena,
    vocab: HierarchyVocab,
    props: Vec<String>,
    nodes: Vec<GNode>,
}

impl<T: LazyTree> GameTreeHandle<T> {
    /// Encodes with the vocabulary inferred from the automaton's priorities.
    pub fn new(a: &Apka, inner: T) -> Result<Self, HierarchyError> {
        let vocab = HierarchyVocab::infer(a);
        Self::with_vocab(a, inner, vocab)
    }

    pub fn with_vocab(a: &Apka, mut inner: T, vocab: HierarchyVocab) -> Result<Self, HierarchyError> {
        for s in &a.states {
            if vocab.f_index(s.priority).is_none() {
                return Err(HierarchyError::PriorityOutOfVocabulary {
                    state: s.name.clone(),
                    priority: s.priority,
                    vocab: vocab.to_string(),
                });
            }
        }
        let table: Arc<Compiled> = Compiled::new(a).map_err(GameError::from)?;
        let machine = Machine::from_table(table, inner.props())?;
        let root = inner.root();
        let mut h = GameTreeHandle { machine, inner, arena: EnvArena::new(), vocab, props: vocab.props(), nodes: Vec::new() };
        let cfg = h.machine.initial(root);
        h.push(cfg);
        Ok(h)
    }

    pub fn vocab(&self) -> HierarchyVocab {
        self.vocab
    }

    pub fn config(&self, n: NodeRef) -> &Config {
        &self.nodes[n as usize].config
    }

    /// Priorities on the inner priority stack at node `n`.
    pub fn inner_prios(&self, n: NodeRef) -> Vec<u32> {
        self.nodes[n as usize].config.prios.iter().map(|p| p.priority).collect()
    }

    pub fn label_name(&self, n: NodeRef) -> &str {
        &self.props[self.nodes[n as usize].label]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, config: Config) -> NodeRef {
        let label = self.label_of(&config);
        self.nodes.push(GNode { config, label, children: None });
        (self.nodes.len() - 1) as NodeRef
    }

    fn label_of(&mut self, cfg: &Config) -> usize {
        let cur = cfg.current;
        let node = self.machine.table.node(cur.formula).clone();
        match node.kind {
            QKind::StateRef(x) => self.vocab.f_index(self.machine.table.priority(x)).expect("checked at construction"),
            QKind::Arg { index, .. } => {
                let bound = self.arena.get(cur.env).bindings[index];
                if node.ty.is_ground() && bound.env != cfg.computing {
                    V
                } else {
                    D
                }
            }
            QKind::App(..) | QKind::Or(..) | QKind::Diamond(_) => D,
            QKind::And(..) | QKind::Box(_) => C,
            QKind::Lit { .. } | QKind::True | QKind::False => {
                if self.machine.literal_value(cur.formula, cfg.node, &mut self.inner).unwrap() {
                    T
                } else {
                    F
                }
            }
        }
    }

    fn expand(&mut self, n: NodeRef) -> [NodeRef; 2] {
        if let Some(c) = self.nodes[n as usize].children {
            return c;
        }
        let cfg = self.nodes[n as usize].config.clone();
        let step = self.nodes.len() as u64;
        let children = match self.machine.pending(&cfg, &mut self.inner) {
            Pending::Won { .. } => [n, n],
            Pending::Deterministic => {
                let (next, _) = self.machine.advance(&cfg, None, &mut self.arena, &mut self.inner, step).expect("deterministic step");
                let c = self.push(next);
                [c, c]
            }
            Pending::Choice { .. } => {
                let mut out = [0; 2];
                for (i, d) in [Dir::Left, Dir::Right].into_iter().enumerate() {
                    let (next, _) = self.machine.advance(&cfg, Some(d), &mut self.arena, &mut self.inner, step).expect("choice step");
                    out[i] = self.push(next);
                }
                out
            }
        };
        self.nodes[n as usize].children = Some(children);
        children
    }

    /// Labels along a path of directions from the root, root first.
    pub fn path_labels(&mut self, path: &[Dir]) -> Vec<String> {
        let mut n = 0;
        let mut out = vec![self.label_name(0).to_string()];
        for &d in path {
            n = self.child(n, d);
            out.push(self.label_name(n).to_string());
        }
        out
    }
}

impl<T: LazyTree> LazyTree for GameTreeHandle<T> {
    fn props(&self) -> &[String] {
        &self.props
    }
    fn root(&mut self) -> NodeRef {
        0
    }
    fn label(&mut self, n: NodeRef) -> LabelSet {
        LabelSet::single(self.nodes[n as usize].label)
    }
    fn child(&mut self, n: NodeRef, d: Dir) -> NodeRef {
        self.expand(n)[d.index()]
    }
    fn node_name(&self, n: NodeRef) -> String {
        format!("g{n}")
    }
}

/// Depth-`depth` prefix of the encoding of `a` over `t`.
pub fn encode_prefix<T: LazyTree>(t: T, a: &Apka, depth: usize, caps: &Caps) -> Result<PrefixTree, HierarchyError> {
    let mut h = GameTreeHandle::new(a, t)?;
    Ok(prefix(&mut h, depth, caps)?)
}

// ---------------------------------------------------------------------------
// Fixpoint iteration

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub vocab: HierarchyVocab,
    /// Distance between the depth-`d` prefixes of iterate `k` and `k+1`.
    pub distances: Vec<DyadicDistance>,
    /// `true` if the prefix at depth `d-1` is unchanged by one more application.
    pub residual_zero: bool,
    /// First iterate whose depth-`d` prefix never changes afterwards.
    pub stable_from: Option<usize>,
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vocabulary {}", self.vocab)?;
        for (k, d) in self.distances.iter().enumerate() {
            writeln!(f, "d(T{k}, T{}) = {d}", k + 1)?;
        }
        match self.stable_from {
            Some(k) => writeln!(f, "stable from iterate {k}")?,
            None => writeln!(f, "not stable within the iterations")?,
        }
        write!(f, "residual {}", if self.residual_zero { "zero" } else { "nonzero" })
    }
}

/// Iterates `t ↦ T(t, a)` from `seed`; returns the depth-`depth` prefix of
/// the last iterate.
pub fn banach_iterate(
    a: &Apka,
    seed: &RegularTree,
    iters: usize,
    depth: usize,
    caps: &Caps,
) -> Result<(PrefixTree, ConvergenceReport), HierarchyError> {
    let vocab = HierarchyVocab::infer(a);
    let expected = vocab.props();
    if seed.props != expected {
        return Err(HierarchyError::NotOverVocabulary { expected, found: seed.props.clone() });
    }
    let mut cur: Box<dyn LazyTree> = Box::new(seed.clone());
    let mut prefixes = vec![prefix(&mut cur, depth, caps)?];
    for _ in 0..iters {
        cur = Box::new(GameTreeHandle::with_vocab(a, cur, vocab)?);
        prefixes.push(prefix(&mut cur, depth, caps)?);
    }
    let mut next: Box<dyn LazyTree> = Box::new(GameTreeHandle::with_vocab(a, cur, vocab)?);
    let below = depth.saturating_sub(1);
    let residual_zero = prefix(&mut next, below, caps)? == prefixes.last().unwrap().truncate(below);
    let distances = prefixes
        .windows(2)
        .map(|w| prefix_distance(&w[0], &w[1], depth + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let last = prefixes.last().unwrap();
    let stable_from = (0..prefixes.len()).find(|&k| prefixes[k..].iter().all(|p| p == last));
    let report = ConvergenceReport { vocab, distances, residual_zero, stable_from };
    Ok((prefixes.pop().unwrap(), report))
}
