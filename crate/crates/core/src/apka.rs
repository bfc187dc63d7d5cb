//! Automata: the five-tuple, its text format, validation, complementation,
//! the alternation-class descriptor, and the compiled subformula table used
//! by the machine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{self, Dialect, Formula, Parser, SimpleType, SyntaxError, Tok, TypeError, TypingContext};

/// One state `X` with its declared type, priority, lambda signature and body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub ty: SimpleType,
    pub priority: u32,
    pub args: Vec<(String, SimpleType)>,
    pub body: Formula,
}

impl StateDecl {
    /// `τ1 -> ... -> τn -> Pr` built from the lambda signature.
    pub fn signature_type(&self) -> SimpleType {
        SimpleType::from_args(self.args.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Apka {
    pub props: Vec<String>,
    pub init: String,
    pub states: Vec<StateDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(p: u32) -> Parity {
        if p.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassDescriptor {
    pub index: usize,
    pub max_parity: Parity,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("automaton has no states")]
    NoStates,
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProp(String),
    #[error("name `{0}` is used both as a proposition and as a state")]
    PropStateClash(String),
    #[error("state `{state}`: argument `{arg}` clashes with another argument, a state or a proposition")]
    ArgClash { state: String, arg: String },
    #[error("init state `{0}` is not declared")]
    UnknownInit(String),
    #[error("init not ground: `{state}` has type {ty}")]
    InitNotGround { state: String, ty: SimpleType },
    #[error("state `{state}`: declared type {declared} does not match argument signature {from_args}")]
    SignatureMismatch { state: String, declared: SimpleType, from_args: SimpleType },
    #[error("state `{state}`: unknown identifier `{name}`")]
    UnknownIdentifier { state: String, name: String },
    #[error("state `{state}`: binders are not allowed in automaton bodies")]
    Dialect { state: String },
    #[error("state `{state}`: ill-typed body: {error}")]
    IllTyped { state: String, error: TypeError },
    #[error("state `{state}`: body has type {ty}, expected Pr")]
    BodyNotGround { state: String, ty: SimpleType },
    #[error("priorities {found:?} are not of the form {{0..m-1}} or {{1..m}}")]
    PriorityRange { found: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("missing `{0}` line")]
    Missing(&'static str),
}

impl Apka {
    pub fn state(&self, name: &str) -> Option<&StateDecl> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn priorities(&self) -> BTreeSet<u32> {
        self.states.iter().map(|s| s.priority).collect()
    }

    /// Parses the line-oriented automaton format.
    pub fn parse(text: &str) -> Result<Apka, LoadError> {
        let mut p = Parser::new(syntax::lex(text)?);
        let mut props = None;
        let mut init = None;
        let mut states = Vec::new();
        while !p.at_eof() {
            if p.is_keyword("props") {
                p.bump();
                let mut list = Vec::new();
                while matches!(p.peek(), Tok::Ident(s) if s != "init" && s != "state" && s != "props") {
                    list.push(p.ident()?);
                    if *p.peek() == Tok::Comma {
                        p.bump();
                    }
                }
                props = Some(list);
            } else if p.is_keyword("init") {
                p.bump();
                init = Some(p.ident()?);
            } else if p.is_keyword("state") {
                p.bump();
                states.push(parse_state(&mut p)?);
            } else {
                return p.err(format!("expected `props`, `init` or `state`, found {}", p.peek())).map_err(Into::into);
            }
        }
        let mut a = Apka {
            props: props.ok_or(LoadError::Missing("props"))?,
            init: init.ok_or(LoadError::Missing("init"))?,
            states,
        };
        a.resolve_state_names();
        Ok(a)
    }

    /// Turns identifiers that name states into `Var` nodes.
    pub fn resolve_state_names(&mut self) {
        let names: BTreeSet<String> = self.states.iter().map(|s| s.name.clone()).collect();
        for s in &mut self.states {
            let args: BTreeSet<String> = s.args.iter().map(|(a, _)| a.clone()).collect();
            s.body = resolve(&s.body, &names, &args);
        }
    }

    /// Structural validation; an empty report means the automaton is well-formed.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        if self.states.is_empty() {
            out.push(Violation::NoStates);
        }
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.name.as_str()) {
                out.push(Violation::DuplicateState(s.name.clone()));
            }
        }
        let mut seen_props = BTreeSet::new();
        for p in &self.props {
            if !seen_props.insert(p.as_str()) {
                out.push(Violation::DuplicateProp(p.clone()));
            }
            if seen.contains(p.as_str()) {
                out.push(Violation::PropStateClash(p.clone()));
            }
        }
        match self.state(&self.init) {
            None => out.push(Violation::UnknownInit(self.init.clone())),
            Some(s) if !s.ty.is_ground() => {
                out.push(Violation::InitNotGround { state: s.name.clone(), ty: s.ty.clone() })
            }
            _ => {}
        }
        let mut base = TypingContext::new();
        for s in &self.states {
            base.fixpoint_vars.insert(s.name.clone(), s.ty.clone());
        }
        for s in &self.states {
            let sig = s.signature_type();
            if sig != s.ty {
                out.push(Violation::SignatureMismatch {
                    state: s.name.clone(),
                    declared: s.ty.clone(),
                    from_args: sig,
                });
            }
            let mut arg_names = BTreeSet::new();
            for (a, _) in &s.args {
                if !arg_names.insert(a.as_str()) || seen.contains(a.as_str()) || seen_props.contains(a.as_str()) {
                    out.push(Violation::ArgClash { state: s.name.clone(), arg: a.clone() });
                }
            }
            if s.body.has_binders() {
                out.push(Violation::Dialect { state: s.name.clone() });
                continue;
            }
            let mut unknown = false;
            s.body.visit(&mut |f| match f {
                Formula::Prop(n) | Formula::NegProp(n) if !seen_props.contains(n.as_str()) => {
                    out.push(Violation::UnknownIdentifier { state: s.name.clone(), name: n.clone() });
                    unknown = true;
                }
                Formula::Var(n) if !seen.contains(n.as_str()) && !arg_names.contains(n.as_str()) => {
                    out.push(Violation::UnknownIdentifier { state: s.name.clone(), name: n.clone() });
                    unknown = true;
                }
                _ => {}
            });
            if unknown {
                continue;
            }
            let mut ctx = base.clone();
            for (a, t) in &s.args {
                ctx.lambda_vars.insert(a.clone(), t.clone());
            }
            match syntax::typecheck(&ctx, &s.body, Dialect::ApkaBody) {
                Ok(t) if t.is_ground() => {}
                Ok(t) => out.push(Violation::BodyNotGround { state: s.name.clone(), ty: t }),
                Err(e) => out.push(Violation::IllTyped { state: s.name.clone(), error: e }),
            }
        }
        let prios: Vec<u32> = self.priorities().into_iter().collect();
        if !prios.is_empty() {
            let lo = prios[0];
            let contiguous = prios.iter().enumerate().all(|(i, &p)| p == lo + i as u32);
            if lo > 1 || !contiguous {
                out.push(Violation::PriorityRange { found: prios });
            }
        }
        ValidationReport { violations: out }
    }

    /// Dual automaton: connectives and literals dualized, priorities shifted
    /// by one (up when the range starts at 0, down when it starts at 1).
    pub fn complement(&self) -> Apka {
        let lo = self.priorities().into_iter().next().unwrap_or(0);
        let states = self
            .states
            .iter()
            .map(|s| StateDecl {
                priority: if lo == 0 { s.priority + 1 } else { s.priority - 1 },
                body: s.body.dual(),
                ..s.clone()
            })
            .collect();
        Apka { states, ..self.clone() }
    }

    pub fn descriptor(&self) -> ClassDescriptor {
        let prios = self.priorities();
        ClassDescriptor {
            index: prios.len(),
            max_parity: Parity::of(prios.iter().next_back().copied().unwrap_or(0)),
            order: self.order(),
        }
    }

    pub fn order(&self) -> usize {
        self.states.iter().map(|s| s.ty.order()).max().unwrap_or(0)
    }

    /// Bit-reproducible text form, states in declaration order.
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Apka {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "props")?;
        for p in &self.props {
            write!(f, " {p}")?;
        }
        writeln!(f)?;
        writeln!(f, "init {}", self.init)?;
        for s in &self.states {
            write!(f, "state {} : {} {{ prio {} ;", s.name, s.ty, s.priority)?;
            if !s.args.is_empty() {
                write!(f, " args")?;
                for (a, t) in &s.args {
                    write!(f, " {a}:{t}")?;
                }
                write!(f, " ;")?;
            }
            writeln!(f, " body {} }}", s.body)?;
        }
        Ok(())
    }
}

fn parse_state(p: &mut Parser) -> Result<StateDecl, SyntaxError> {
    let name = p.ident()?;
    p.expect(Tok::Colon)?;
    let ty = p.parse_type()?;
    p.expect(Tok::LBrace)?;
    let mut priority = None;
    let mut args = Vec::new();
    let mut body = None;
    loop {
        if *p.peek() == Tok::RBrace {
            p.bump();
            break;
        }
        if p.is_keyword("prio") {
            p.bump();
            let pos = p.pos();
            match p.bump() {
                Tok::Number(n) if n <= u32::MAX as u64 => priority = Some(n as u32),
                other => return Err(SyntaxError::new(pos, format!("expected a priority, found {other}"))),
            }
        } else if p.is_keyword("args") {
            p.bump();
            while let Tok::Ident(_) = p.peek() {
                let a = p.ident()?;
                p.expect(Tok::Colon)?;
                let t = p.parse_type()?;
                args.push((a, t));
                if *p.peek() == Tok::Comma {
                    p.bump();
                }
            }
        } else if p.is_keyword("body") {
            p.bump();
            body = Some(p.parse_formula(Dialect::ApkaBody)?);
        } else {
            return p.err(format!("expected `prio`, `args`, `body` or `}}`, found {}", p.peek()));
        }
        match p.peek() {
            Tok::Semi => {
                p.bump();
            }
            Tok::RBrace => {}
            other => return p.err(format!("expected `;` or `}}`, found {other}")),
        }
    }
    let priority = priority.ok_or_else(|| SyntaxError::new(p.pos(), format!("state `{name}` has no `prio`")))?;
    let body = body.ok_or_else(|| SyntaxError::new(p.pos(), format!("state `{name}` has no `body`")))?;
    Ok(StateDecl { name, ty, priority, args, body })
}

fn resolve(f: &Formula, states: &BTreeSet<String>, args: &BTreeSet<String>) -> Formula {
    match f {
        Formula::Prop(n) | Formula::Var(n) if states.contains(n) && !args.contains(n) => Formula::Var(n.clone()),
        Formula::Diamond(c) => Formula::diamond(resolve(c, states, args)),
        Formula::Box(c) => Formula::boxed(resolve(c, states, args)),
        Formula::Or(l, r) => Formula::or(resolve(l, states, args), resolve(r, states, args)),
        Formula::And(l, r) => Formula::and(resolve(l, states, args), resolve(r, states, args)),
        Formula::App(l, r) => Formula::app(resolve(l, states, args), resolve(r, states, args)),
        _ => f.clone(),
    }
}

// ---------------------------------------------------------------------------
// Compiled subformula table

/// Index into [`Compiled::nodes`].
pub type QId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QKind {
    /// An occurrence of a state (also used for the synthetic per-state nodes).
    StateRef(usize),
    App(QId, QId),
    /// Lambda variable `index` of state `owner`.
    Arg { owner: usize, index: usize },
    Or(QId, QId),
    And(QId, QId),
    Diamond(QId),
    Box(QId),
    /// Literal over proposition `prop` (index into [`Apka::props`]).
    Lit { prop: usize, negated: bool },
    True,
    False,
}

#[derive(Debug, Clone)]
pub struct QNode {
    pub kind: QKind,
    pub ty: SimpleType,
    /// State whose body contains this node; for synthetic nodes, the state itself.
    pub state: usize,
    /// Number of nodes in the subtree rooted here (preorder layout).
    pub size: u32,
}

/// Every subformula occurrence of every body, in preorder per body, followed
/// by one synthetic node per state standing for "the state itself".
#[derive(Debug, Clone)]
pub struct Compiled {
    pub apka: Apka,
    pub nodes: Vec<QNode>,
    pub body_root: Vec<QId>,
    pub state_node: Vec<QId>,
    pub init: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid automaton:\n{0}")]
pub struct InvalidApka(pub ValidationReport);

impl Compiled {
    pub fn new(a: &Apka) -> Result<Arc<Compiled>, InvalidApka> {
        let report = a.validate();
        if !report.is_empty() {
            return Err(InvalidApka(report));
        }
        let index: HashMap<&str, usize> = a.states.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
        let props: HashMap<&str, usize> = a.props.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let mut c = Compiled {
            apka: a.clone(),
            nodes: Vec::new(),
            body_root: Vec::new(),
            state_node: Vec::new(),
            init: index[a.init.as_str()],
        };
        for (si, s) in a.states.iter().enumerate() {
            let root = c.compile(&s.body, si, &index, &props);
            c.body_root.push(root);
        }
        for (si, s) in a.states.iter().enumerate() {
            let id = c.nodes.len() as QId;
            c.nodes.push(QNode { kind: QKind::StateRef(si), ty: s.ty.clone(), state: si, size: 1 });
            c.state_node.push(id);
        }
        Ok(Arc::new(c))
    }

    fn compile(&mut self, f: &Formula, si: usize, index: &HashMap<&str, usize>, props: &HashMap<&str, usize>) -> QId {
        let id = self.nodes.len() as QId;
        self.nodes.push(QNode { kind: QKind::True, ty: SimpleType::Ground, state: si, size: 1 });
        let (kind, ty) = match f {
            Formula::True => (QKind::True, SimpleType::Ground),
            Formula::False => (QKind::False, SimpleType::Ground),
            Formula::Prop(p) => (QKind::Lit { prop: props[p.as_str()], negated: false }, SimpleType::Ground),
            Formula::NegProp(p) => (QKind::Lit { prop: props[p.as_str()], negated: true }, SimpleType::Ground),
            Formula::Var(n) => {
                let decl = &self.apka.states[si];
                if let Some(j) = decl.args.iter().position(|(a, _)| a == n) {
                    (QKind::Arg { owner: si, index: j }, decl.args[j].1.clone())
                } else {
                    let x = index[n.as_str()];
                    (QKind::StateRef(x), self.apka.states[x].ty.clone())
                }
            }
            Formula::Diamond(c) => (QKind::Diamond(self.compile(c, si, index, props)), SimpleType::Ground),
            Formula::Box(c) => (QKind::Box(self.compile(c, si, index, props)), SimpleType::Ground),
            Formula::Or(l, r) => {
                let l = self.compile(l, si, index, props);
                let r = self.compile(r, si, index, props);
                (QKind::Or(l, r), SimpleType::Ground)
            }
            Formula::And(l, r) => {
                let l = self.compile(l, si, index, props);
                let r = self.compile(r, si, index, props);
                (QKind::And(l, r), SimpleType::Ground)
            }
            Formula::App(l, r) => {
                let lid = self.compile(l, si, index, props);
                let rid = self.compile(r, si, index, props);
                let ty = match &self.nodes[lid as usize].ty {
                    SimpleType::Arrow(_, res) => (**res).clone(),
                    SimpleType::Ground => unreachable!("validated body"),
                };
                (QKind::App(lid, rid), ty)
            }
            Formula::Lambda(..) | Formula::Mu(..) | Formula::Nu(..) => unreachable!("validated body"),
        };
        let size = self.nodes.len() as u32 - id;
        self.nodes[id as usize] = QNode { kind, ty, state: si, size };
        id
    }

    pub fn node(&self, q: QId) -> &QNode {
        &self.nodes[q as usize]
    }

    /// `true` if `inner` is a proper subformula occurrence of `outer`.
    pub fn is_proper_subformula(&self, inner: QId, outer: QId) -> bool {
        let o = &self.nodes[outer as usize];
        let in_body = (outer as usize) < self.nodes.len() - self.state_node.len();
        in_body && inner > outer && inner < outer + o.size
    }

    /// The subformula as a formula (synthetic nodes print as the state name).
    pub fn formula(&self, q: QId) -> Formula {
        let n = &self.nodes[q as usize];
        match &n.kind {
            QKind::StateRef(x) => Formula::var(self.apka.states[*x].name.clone()),
            QKind::App(l, r) => Formula::app(self.formula(*l), self.formula(*r)),
            QKind::Arg { owner, index } => Formula::var(self.apka.states[*owner].args[*index].0.clone()),
            QKind::Or(l, r) => Formula::or(self.formula(*l), self.formula(*r)),
            QKind::And(l, r) => Formula::and(self.formula(*l), self.formula(*r)),
            QKind::Diamond(c) => Formula::diamond(self.formula(*c)),
            QKind::Box(c) => Formula::boxed(self.formula(*c)),
            QKind::Lit { prop, negated } => {
                let p = self.apka.props[*prop].clone();
                if *negated {
                    Formula::NegProp(p)
                } else {
                    Formula::Prop(p)
                }
            }
            QKind::True => Formula::True,
            QKind::False => Formula::False,
        }
    }

    pub fn priority(&self, state: usize) -> u32 {
        self.apka.states[state].priority
    }
}

/// Maps an arbitrary priority assignment onto a contiguous range starting
/// at 0 or 1. Neighbouring distinct priorities of equal parity are merged, so
/// every priority keeps its parity and the relative order is preserved.
pub fn normalize_priorities(prios: &[u32]) -> Vec<u32> {
    let distinct: BTreeSet<u32> = prios.iter().copied().collect();
    let mut map = BTreeMap::new();
    let mut prev: Option<(u32, u32)> = None;
    for p in distinct {
        let v = match prev {
            None => p % 2,
            Some((q, v)) if q % 2 == p % 2 => v,
            Some((_, v)) => v + 1,
        };
        map.insert(p, v);
        prev = Some((p, v));
    }
    prios.iter().map(|p| map[p]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EX1: &str = "props P
init I
state I : Pr { prio 1 ; body (X !P) }
state X : Pr -> Pr { prio 1 ; args x:Pr ; body (<> x) \\/ ([] Y) }
state Y : Pr { prio 0 ; body (X Y) }
";

    #[test]
    fn example_one_round_trips() {
        let a = Apka::parse(EX1).unwrap();
        assert!(a.validate().is_empty(), "{}", a.validate());
        assert_eq!(a.serialize(), EX1);
        assert_eq!(a.state("Y").unwrap().body, Formula::app(Formula::var("X"), Formula::var("Y")));
    }

    #[test]
    fn init_not_ground() {
        let mut a = Apka::parse(EX1).unwrap();
        a.states[0].ty = SimpleType::arrow(SimpleType::Ground, SimpleType::Ground);
        let r = a.validate();
        assert!(r.violations.iter().any(|v| matches!(v, Violation::InitNotGround { .. })));
        assert!(r.to_string().contains("init not ground"));
    }

    #[test]
    fn shifted_range_is_fine() {
        let mut a = Apka::parse(EX1).unwrap();
        a.states[2].priority = 2;
        assert!(a.validate().is_empty());
        a.states[2].priority = 3;
        assert!(matches!(a.validate().violations[..], [Violation::PriorityRange { .. }]));
    }

    #[test]
    fn unknown_identifiers_and_types() {
        let a = Apka::parse("props P\ninit I\nstate I : Pr { prio 0 ; body (Z Q) }\n").unwrap();
        let r = a.validate();
        assert_eq!(r.violations.len(), 2, "{r}");
        let a = Apka::parse("props P\ninit I\nstate I : Pr { prio 0 ; body (P P) }\n").unwrap();
        assert!(matches!(a.validate().violations[..], [Violation::IllTyped { .. }]));
    }

    #[test]
    fn complement_example_one() {
        let a = Apka::parse(EX1).unwrap();
        let c = a.complement();
        assert!(c.validate().is_empty());
        let prios: Vec<u32> = c.states.iter().map(|s| s.priority).collect();
        assert_eq!(prios, vec![2, 2, 1]);
        assert_eq!(c.state("X").unwrap().body.to_string(), "([] x) /\\ (<> Y)");
        assert_eq!(c.state("I").unwrap().body.to_string(), "(X P)");
        let cc = c.complement();
        assert_eq!(cc, a);
        assert_eq!(a.descriptor().index, c.descriptor().index);
        assert_ne!(a.descriptor().max_parity, c.descriptor().max_parity);
    }

    #[test]
    fn descriptor_example_one() {
        let d = Apka::parse(EX1).unwrap().descriptor();
        assert_eq!(d, ClassDescriptor { index: 2, max_parity: Parity::Odd, order: 1 });
        let single = Apka::parse("props\ninit Z\nstate Z : Pr { prio 0 ; body [] Z }\n").unwrap();
        assert_eq!(single.descriptor(), ClassDescriptor { index: 1, max_parity: Parity::Even, order: 0 });
    }

    #[test]
    fn compiled_table_layout() {
        let c = Compiled::new(&Apka::parse(EX1).unwrap()).unwrap();
        // I: App, X, !P | X: Or, <>, x, [], Y | Y: App, X, Y | synthetic I, X, Y
        assert_eq!(c.nodes.len(), 3 + 5 + 3 + 3);
        assert_eq!(c.body_root, vec![0, 3, 8]);
        assert_eq!(c.state_node, vec![11, 12, 13]);
        assert!(c.is_proper_subformula(5, 3));
        assert!(!c.is_proper_subformula(3, 3));
        assert!(!c.is_proper_subformula(8, 3));
        assert_eq!(c.formula(3).to_string(), "(<> x) \\/ ([] Y)");
        assert_eq!(c.node(1).ty, SimpleType::arrow(SimpleType::Ground, SimpleType::Ground));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_priorities(&[3, 5, 3]), vec![1, 1, 1]);
        assert_eq!(normalize_priorities(&[0, 2, 3]), vec![0, 0, 1]);
        assert_eq!(normalize_priorities(&[2, 7]), vec![0, 1]);
        assert_eq!(normalize_priorities(&[4]), vec![0]);
        assert_eq!(normalize_priorities(&[5]), vec![1]);
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = Apka::parse("props P\ninit I\nstate I : Pr { prio ; body tt }").unwrap_err();
        assert!(e.to_string().contains("3:21"), "{e}");
    }
}
