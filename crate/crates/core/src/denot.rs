//! Denotational semantics over regular trees: HFL evaluation and direct
//! solving of an automaton's equation system. Values at ground type are sets
//! of tree-states (bitmasks); function values are tables over the enumerated
//! monotone argument lattice.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::apka::{Apka, InvalidApka, Parity};
use crate::caps::Caps;
use crate::syntax::{FixKind, Formula, SimpleType};
use crate::trees::{NodeRef, RegularTree};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemValue {
    Set(u64),
    /// Entry `i` is the image of element `i` of the argument domain.
    Fun(Arc<[SemValue]>),
}

impl SemValue {
    pub fn as_set(&self) -> Option<u64> {
        match self {
            SemValue::Set(s) => Some(*s),
            SemValue::Fun(_) => None,
        }
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        self.as_set().is_some_and(|s| s >> node & 1 == 1)
    }

    /// Pointwise order.
    pub fn leq(&self, other: &SemValue) -> bool {
        match (self, other) {
            (SemValue::Set(a), SemValue::Set(b)) => a & !b == 0,
            (SemValue::Fun(a), SemValue::Fun(b)) => a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.leq(y)),
            _ => false,
        }
    }
}

impl fmt::Display for SemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemValue::Set(s) => {
                let items: Vec<String> = (0..64).filter(|i| s >> i & 1 == 1).map(|i| format!("t{i}")).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            SemValue::Fun(t) => {
                write!(f, "[")?;
                for (i, v) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Typed bindings for the free variables of a formula.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub map: BTreeMap<String, (SimpleType, SemValue)>,
}

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, name: impl Into<String>, ty: SimpleType, v: SemValue) -> Self {
        self.map.insert(name.into(), (ty, v));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DenotError {
    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("proposition `{0}` is not declared by the tree")]
    UnknownProposition(String),
    #[error("ill-typed formula: {0}")]
    IllTyped(String),
    #[error("fixpoint iteration exceeded the lattice height {0}")]
    NonConvergent(u64),
    #[error(transparent)]
    Invalid(#[from] InvalidApka),
}

/// An enumerated lattice of monotone values at a non-ground type.
#[derive(Debug)]
struct Domain {
    elems: Vec<SemValue>,
    index: HashMap<SemValue, usize>,
}

/// Argument lattice of a lambda or table: ground ones are indexed by the bitmask.
#[derive(Debug, Clone)]
enum ArgDom {
    Ground(usize),
    Enumerated(Arc<Domain>),
}

impl ArgDom {
    fn len(&self) -> usize {
        match self {
            ArgDom::Ground(n) => *n,
            ArgDom::Enumerated(d) => d.elems.len(),
        }
    }

    fn elem(&self, i: usize) -> SemValue {
        match self {
            ArgDom::Ground(_) => SemValue::Set(i as u64),
            ArgDom::Enumerated(d) => d.elems[i].clone(),
        }
    }

    fn index_of(&self, v: &SemValue) -> usize {
        match (self, v) {
            (ArgDom::Ground(_), SemValue::Set(s)) => *s as usize,
            (ArgDom::Enumerated(d), v) => *d.index.get(v).expect("argument outside the enumerated monotone lattice"),
            _ => unreachable!("ill-typed application"),
        }
    }
}

#[derive(Debug)]
enum Term {
    Const(u64),
    Diamond(Box<Term>),
    Box(Box<Term>),
    Or(Box<Term>, Box<Term>),
    And(Box<Term>, Box<Term>),
    /// Slot counted from the bottom of the environment stack.
    Slot(usize),
    App(Box<Term>, Box<Term>, ArgDom),
    Lambda(ArgDom, Box<Term>),
    Fix { start: SemValue, height: u64, body: Box<Term> },
}

/// Evaluation context for one regular tree.
pub struct Evaluator<'t> {
    st: &'t RegularTree,
    caps: Caps,
    m: usize,
    full: u64,
    domains: HashMap<SimpleType, Arc<Domain>>,
    /// Number of fixpoint iterations performed so far.
    pub iterations: u64,
}

impl<'t> Evaluator<'t> {
    pub fn new(st: &'t RegularTree, caps: &Caps) -> Result<Self, DenotError> {
        let m = st.len();
        if m > caps.max_states || m > 63 {
            return Err(DenotError::CapExceeded(format!("{m} tree-states (cap {})", caps.max_states)));
        }
        Ok(Evaluator { st, caps: *caps, m, full: (1u64 << m) - 1, domains: HashMap::new(), iterations: 0 })
    }

    pub fn full(&self) -> u64 {
        self.full
    }

    fn check_type(&self, t: &SimpleType) -> Result<(), DenotError> {
        if t.order() > self.caps.max_order {
            return Err(DenotError::CapExceeded(format!("type {t} has order {} (cap {})", t.order(), self.caps.max_order)));
        }
        if t.arity() > self.caps.max_args {
            return Err(DenotError::CapExceeded(format!("type {t} has {} arguments (cap {})", t.arity(), self.caps.max_args)));
        }
        Ok(())
    }

    fn arg_dom(&mut self, t: &SimpleType) -> Result<ArgDom, DenotError> {
        if t.is_ground() {
            let n = 1usize << self.m;
            if n > self.caps.max_domain {
                return Err(DenotError::CapExceeded(format!("lattice of size {n} (cap {})", self.caps.max_domain)));
            }
            return Ok(ArgDom::Ground(n));
        }
        Ok(ArgDom::Enumerated(self.domain(t)?))
    }

    /// The monotone elements at `t`, enumerated once per type.
    fn domain(&mut self, t: &SimpleType) -> Result<Arc<Domain>, DenotError> {
        if let Some(d) = self.domains.get(t) {
            return Ok(d.clone());
        }
        let elems = match t {
            SimpleType::Ground => (0..=self.full).map(SemValue::Set).collect(),
            SimpleType::Arrow(a, r) => {
                let a = self.arg_dom(a)?;
                let r = self.domain(r)?;
                let args: Vec<SemValue> = (0..a.len()).map(|i| a.elem(i)).collect();
                enumerate_monotone(&args, &r.elems, self.caps.max_domain)
                    .ok_or_else(|| DenotError::CapExceeded(format!("more than {} monotone values at type {t}", self.caps.max_domain)))?
            }
        };
        let index = elems.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let d = Arc::new(Domain { elems, index });
        self.domains.insert(t.clone(), d.clone());
        Ok(d)
    }

    fn extreme(&mut self, t: &SimpleType, top: bool) -> Result<SemValue, DenotError> {
        Ok(match t {
            SimpleType::Ground => SemValue::Set(if top { self.full } else { 0 }),
            SimpleType::Arrow(a, r) => {
                let n = self.arg_dom(a)?.len();
                let v = self.extreme(r, top)?;
                SemValue::Fun(vec![v; n].into())
            }
        })
    }

    fn height(&mut self, t: &SimpleType) -> Result<u64, DenotError> {
        Ok(match t {
            SimpleType::Ground => self.m as u64,
            SimpleType::Arrow(a, r) => (self.arg_dom(a)?.len() as u64).saturating_mul(self.height(r)?),
        })
    }

    fn prop_mask(&self, p: &str) -> Result<u64, DenotError> {
        let i = self.st.prop_index(p).ok_or_else(|| DenotError::UnknownProposition(p.to_string()))?;
        Ok((0..self.m).filter(|&n| self.st.labels[n].contains(i)).fold(0, |acc, n| acc | 1 << n))
    }

    fn compile(&mut self, f: &Formula, scope: &mut Vec<(String, SimpleType)>) -> Result<(Term, SimpleType), DenotError> {
        let ground = |t: Term| Ok((t, SimpleType::Ground));
        match f {
            Formula::True => ground(Term::Const(self.full)),
            Formula::False => ground(Term::Const(0)),
            Formula::Prop(p) | Formula::Var(p) if scope.iter().any(|(n, _)| n == p) => {
                let slot = scope.iter().rposition(|(n, _)| n == p).unwrap();
                Ok((Term::Slot(slot), scope[slot].1.clone()))
            }
            Formula::Prop(p) => ground(Term::Const(self.prop_mask(p)?)),
            Formula::NegProp(p) => ground(Term::Const(self.full & !self.prop_mask(p)?)),
            Formula::Var(x) => Err(DenotError::Unbound(x.clone())),
            Formula::Diamond(c) | Formula::Box(c) => {
                let (t, ty) = self.compile(c, scope)?;
                expect_ground(&ty, f)?;
                ground(if matches!(f, Formula::Diamond(_)) { Term::Diamond(Box::new(t)) } else { Term::Box(Box::new(t)) })
            }
            Formula::Or(l, r) | Formula::And(l, r) => {
                let (lt, lty) = self.compile(l, scope)?;
                let (rt, rty) = self.compile(r, scope)?;
                expect_ground(&lty, f)?;
                expect_ground(&rty, f)?;
                ground(if matches!(f, Formula::Or(..)) { Term::Or(Box::new(lt), Box::new(rt)) } else { Term::And(Box::new(lt), Box::new(rt)) })
            }
            Formula::App(l, r) => {
                let (lt, lty) = self.compile(l, scope)?;
                let (rt, rty) = self.compile(r, scope)?;
                match lty {
                    SimpleType::Arrow(a, res) if *a == rty => {
                        let dom = self.arg_dom(&a)?;
                        Ok((Term::App(Box::new(lt), Box::new(rt), dom), (*res).clone()))
                    }
                    other => Err(DenotError::IllTyped(format!("cannot apply {l} of type {other} to {r} of type {rty}"))),
                }
            }
            Formula::Lambda(x, t, b) => {
                self.check_type(t)?;
                let dom = self.arg_dom(t)?;
                scope.push((x.clone(), t.clone()));
                let res = self.compile(b, scope);
                scope.pop();
                let (bt, bty) = res?;
                let ty = SimpleType::arrow(t.clone(), bty);
                self.check_type(&ty)?;
                Ok((Term::Lambda(dom, Box::new(bt)), ty))
            }
            Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
                let kind = if matches!(f, Formula::Mu(..)) { FixKind::Mu } else { FixKind::Nu };
                self.check_type(t)?;
                scope.push((x.clone(), t.clone()));
                let res = self.compile(b, scope);
                scope.pop();
                let (bt, bty) = res?;
                if bty != *t {
                    return Err(DenotError::IllTyped(format!("fixpoint {x} annotated {t} but its body has type {bty}")));
                }
                let start = self.extreme(t, kind == FixKind::Nu)?;
                let height = self.height(t)?;
                Ok((Term::Fix { start, height, body: Box::new(bt) }, t.clone()))
            }
        }
    }

    fn modal(&self, s: u64, all: bool) -> u64 {
        let mut out = 0;
        for n in 0..self.m {
            let l = s >> self.st.left[n] & 1 == 1;
            let r = s >> self.st.right[n] & 1 == 1;
            if (all && l && r) || (!all && (l || r)) {
                out |= 1 << n;
            }
        }
        out
    }

    fn eval(&mut self, t: &Term, env: &mut Vec<SemValue>) -> Result<SemValue, DenotError> {
        let set = |v: SemValue| v.as_set().expect("ground value");
        Ok(match t {
            Term::Const(s) => SemValue::Set(*s),
            Term::Diamond(c) => {
                let s = set(self.eval(c, env)?);
                SemValue::Set(self.modal(s, false))
            }
            Term::Box(c) => {
                let s = set(self.eval(c, env)?);
                SemValue::Set(self.modal(s, true))
            }
            Term::Or(l, r) => SemValue::Set(set(self.eval(l, env)?) | set(self.eval(r, env)?)),
            Term::And(l, r) => SemValue::Set(set(self.eval(l, env)?) & set(self.eval(r, env)?)),
            Term::Slot(i) => env[*i].clone(),
            Term::App(l, r, dom) => {
                let fv = self.eval(l, env)?;
                let av = self.eval(r, env)?;
                match fv {
                    SemValue::Fun(table) => table[dom.index_of(&av)].clone(),
                    SemValue::Set(_) => unreachable!("ill-typed application"),
                }
            }
            Term::Lambda(dom, b) => {
                let mut out = Vec::with_capacity(dom.len());
                for i in 0..dom.len() {
                    env.push(dom.elem(i));
                    let v = self.eval(b, env);
                    env.pop();
                    out.push(v?);
                }
                SemValue::Fun(out.into())
            }
            Term::Fix { start, height, body, .. } => {
                let mut v = start.clone();
                let mut rounds = 0u64;
                loop {
                    env.push(v.clone());
                    let next = self.eval(body, env);
                    env.pop();
                    let next = next?;
                    self.iterations += 1;
                    if next == v {
                        break v;
                    }
                    rounds += 1;
                    if rounds > *height {
                        return Err(DenotError::NonConvergent(*height));
                    }
                    v = next;
                }
            }
        })
    }

    /// `⟦f⟧_η`.
    pub fn eval_formula(&mut self, eta: &Interpretation, f: &Formula) -> Result<SemValue, DenotError> {
        let mut scope: Vec<(String, SimpleType)> = eta.map.iter().map(|(k, (t, _))| (k.clone(), t.clone())).collect();
        let (term, _) = self.compile(f, &mut scope)?;
        let mut env: Vec<SemValue> = eta.map.values().map(|(_, v)| v.clone()).collect();
        self.eval(&term, &mut env)
    }

    /// `true` if `v` is monotone at `t` (checked over all comparable argument pairs).
    pub fn is_monotone(&mut self, t: &SimpleType, v: &SemValue) -> Result<bool, DenotError> {
        match (t, v) {
            (SimpleType::Ground, SemValue::Set(_)) => Ok(true),
            (SimpleType::Arrow(a, r), SemValue::Fun(table)) => {
                let dom = self.arg_dom(a)?;
                for i in 0..dom.len() {
                    if !self.is_monotone(r, &table[i])? {
                        return Ok(false);
                    }
                    for j in 0..dom.len() {
                        if i != j && dom.elem(i).leq(&dom.elem(j)) && !table[i].leq(&table[j]) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            _ => Ok(false),
        }
    }
}

fn expect_ground(t: &SimpleType, f: &Formula) -> Result<(), DenotError> {
    if t.is_ground() {
        Ok(())
    } else {
        Err(DenotError::IllTyped(format!("operand of {f} has type {t}")))
    }
}

/// Every monotone table from `args` into `results`, or `None` past `cap`.
fn enumerate_monotone(args: &[SemValue], results: &[SemValue], cap: usize) -> Option<Vec<SemValue>> {
    let n = args.len();
    let related: Vec<Vec<(usize, bool)>> = (0..n)
        .map(|i| {
            (0..i)
                .filter_map(|j| {
                    if args[j].leq(&args[i]) {
                        Some((j, true))
                    } else if args[i].leq(&args[j]) {
                        Some((j, false))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    fn go(
        i: usize,
        choice: &mut Vec<usize>,
        related: &[Vec<(usize, bool)>],
        results: &[SemValue],
        out: &mut Vec<SemValue>,
        cap: usize,
    ) -> bool {
        if i == choice.len() {
            if out.len() >= cap {
                return false;
            }
            out.push(SemValue::Fun(choice.iter().map(|&c| results[c].clone()).collect()));
            return true;
        }
        for c in 0..results.len() {
            let ok = related[i].iter().all(|&(j, below)| {
                if below {
                    results[choice[j]].leq(&results[c])
                } else {
                    results[c].leq(&results[choice[j]])
                }
            });
            if ok {
                choice[i] = c;
                if !go(i + 1, choice, related, results, out, cap) {
                    return false;
                }
            }
        }
        true
    }
    go(0, &mut choice, &related, results, &mut out, cap).then_some(out)
}

pub fn eval_hfl(st: &RegularTree, eta: &Interpretation, f: &Formula, caps: &Caps) -> Result<SemValue, DenotError> {
    Evaluator::new(st, caps)?.eval_formula(eta, f)
}

/// `st, node ⊨ f` for a closed formula of ground type.
pub fn check_hfl(st: &RegularTree, node: NodeRef, f: &Formula, caps: &Caps) -> Result<bool, DenotError> {
    let v = eval_hfl(st, &Interpretation::new(), f, caps)?;
    match v {
        SemValue::Set(_) => Ok(v.contains(node)),
        SemValue::Fun(_) => Err(DenotError::IllTyped(format!("{f} is not of ground type"))),
    }
}

/// Values of all states of an automaton, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApkaSolution {
    pub names: Vec<String>,
    pub values: Vec<SemValue>,
    pub init: usize,
}

impl ApkaSolution {
    pub fn get(&self, name: &str) -> Option<&SemValue> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }

    pub fn init_value(&self) -> &SemValue {
        &self.values[self.init]
    }
}

/// Solves `X = λargs.δ(X)` for every state: groups of equal priority are
/// iterated jointly, the highest priority outermost, least fixpoints for odd
/// priorities and greatest for even ones. Inner groups restart on every
/// outer update.
pub fn solve_apka(st: &RegularTree, a: &Apka, caps: &Caps) -> Result<ApkaSolution, DenotError> {
    let report = a.validate();
    if !report.is_empty() {
        return Err(InvalidApka(report).into());
    }
    let mut ev = Evaluator::new(st, caps)?;
    let mut scope: Vec<(String, SimpleType)> = a.states.iter().map(|s| (s.name.clone(), s.ty.clone())).collect();
    let mut terms = Vec::new();
    let mut starts = Vec::new();
    let mut height = 0u64;
    for s in &a.states {
        ev.check_type(&s.ty)?;
        let f = s.args.iter().rev().fold(s.body.clone(), |b, (x, t)| Formula::lambda(x.clone(), t.clone(), b));
        let (term, ty) = ev.compile(&f, &mut scope)?;
        if ty != s.ty {
            return Err(DenotError::IllTyped(format!("state {} declared {} but its body has type {ty}", s.name, s.ty)));
        }
        terms.push(term);
        starts.push(ev.extreme(&s.ty, Parity::of(s.priority) == Parity::Even)?);
        height = height.saturating_add(ev.height(&s.ty)?);
    }
    let mut prios: Vec<u32> = a.states.iter().map(|s| s.priority).collect();
    prios.sort_unstable_by(|x, y| y.cmp(x));
    prios.dedup();
    let groups: Vec<Vec<usize>> = prios
        .iter()
        .map(|&p| (0..a.states.len()).filter(|&i| a.states[i].priority == p).collect())
        .collect();
    let mut values = starts.clone();
    let mut solver = Solver { ev: &mut ev, terms: &terms, starts: &starts, groups: &groups, height };
    solver.solve_from(0, &mut values)?;
    Ok(ApkaSolution {
        names: a.states.iter().map(|s| s.name.clone()).collect(),
        values,
        init: a.state_index(&a.init).unwrap(),
    })
}

struct Solver<'e, 't> {
    ev: &'e mut Evaluator<'t>,
    terms: &'e [Term],
    starts: &'e [SemValue],
    groups: &'e [Vec<usize>],
    height: u64,
}

impl Solver<'_, '_> {
    fn solve_from(&mut self, g: usize, values: &mut Vec<SemValue>) -> Result<(), DenotError> {
        let Some(group) = self.groups.get(g) else {
            return Ok(());
        };
        for &x in group {
            values[x] = self.starts[x].clone();
        }
        let mut rounds = 0u64;
        loop {
            self.solve_from(g + 1, values)?;
            let mut changed = false;
            let mut next = Vec::with_capacity(group.len());
            for &x in group {
                let v = self.ev.eval(&self.terms[x], values)?;
                changed |= v != values[x];
                next.push(v);
            }
            self.ev.iterations += 1;
            if !changed {
                return Ok(());
            }
            rounds += 1;
            if rounds > self.height {
                return Err(DenotError::NonConvergent(self.height));
            }
            for (&x, v) in group.iter().zip(next) {
                values[x] = v;
            }
        }
    }
}

/// `st, node ⊨ a`.
pub fn check_apka(st: &RegularTree, node: NodeRef, a: &Apka, caps: &Caps) -> Result<bool, DenotError> {
    Ok(solve_apka(st, a, caps)?.init_value().contains(node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_hfl;

    const EX1: &str = "props P
init I
state I : Pr { prio 1 ; body (X !P) }
state X : Pr -> Pr { prio 1 ; args x:Pr ; body (<> x) \\/ ([] Y) }
state Y : Pr { prio 0 ; body (X Y) }
";
    const EX2: &str = "props P
root n0
node n0 { labels P ; left n1 ; right n1 }
node n1 { labels P ; left n2 ; right n2 }
node n2 { labels ; left n2 ; right n2 }
";
    const EX1_HFL: &str = "((mu X : Pr -> Pr . \\x : Pr . (<> x) \\/ ([] (nu Y : Pr . (X Y)))) !P)";

    fn tree() -> RegularTree {
        RegularTree::parse(EX2).unwrap()
    }

    #[test]
    fn trivial_fixpoints() {
        let c = Caps::default();
        let t = tree();
        assert_eq!(eval_hfl(&t, &Interpretation::new(), &parse_hfl("mu X : Pr . X").unwrap(), &c).unwrap(), SemValue::Set(0));
        assert_eq!(eval_hfl(&t, &Interpretation::new(), &parse_hfl("nu X : Pr . [] X").unwrap(), &c).unwrap(), SemValue::Set(0b111));
        assert!(check_hfl(&t, 2, &Formula::True, &c).unwrap());
    }

    #[test]
    fn modal_and_props() {
        let c = Caps::default();
        let t = tree();
        assert!(check_hfl(&t, 0, &parse_hfl("P").unwrap(), &c).unwrap());
        assert!(!check_hfl(&t, 2, &parse_hfl("P").unwrap(), &c).unwrap());
        // <> !P holds exactly where a child lacks P: n1 and n2
        let v = eval_hfl(&t, &Interpretation::new(), &parse_hfl("<> !P").unwrap(), &c).unwrap();
        assert_eq!(v, SemValue::Set(0b110));
    }

    #[test]
    fn example_two_accepts() {
        let c = Caps::default();
        let t = tree();
        assert!(check_hfl(&t, 0, &parse_hfl(EX1_HFL).unwrap(), &c).unwrap());
        let a = Apka::parse(EX1).unwrap();
        assert!(check_apka(&t, 0, &a, &c).unwrap());
        assert!(!check_apka(&t, 0, &a.complement(), &c).unwrap());
    }

    #[test]
    fn self_loop_mu_is_empty() {
        let a = Apka::parse("props P\ninit X\nstate X : Pr { prio 1 ; body X }\n").unwrap();
        let s = solve_apka(&tree(), &a, &Caps::default()).unwrap();
        assert_eq!(s.init_value(), &SemValue::Set(0));
    }

    #[test]
    fn function_values_are_monotone() {
        let c = Caps::default();
        let t = tree();
        let mut ev = Evaluator::new(&t, &c).unwrap();
        let f = parse_hfl("mu X : Pr -> Pr . \\x : Pr . (<> x) \\/ ([] (nu Y : Pr . (X Y)))").unwrap();
        let v = ev.eval_formula(&Interpretation::new(), &f).unwrap();
        let ty = SimpleType::arrow(SimpleType::Ground, SimpleType::Ground);
        assert!(ev.is_monotone(&ty, &v).unwrap());
        let bad = SemValue::Fun((0..8u64).map(|i| SemValue::Set(7 - i)).collect());
        assert!(!ev.is_monotone(&ty, &bad).unwrap());
    }

    #[test]
    fn second_order_domain_enumerates_monotone_maps() {
        // a 2-state structure: Pr -> Pr has 6^2 = 36 monotone elements
        let t = RegularTree::parse("props P\nroot a\nnode a { labels P ; left b ; right b }\nnode b { labels ; left a ; right b }").unwrap();
        let caps = Caps::default().with_overrides("order=2").unwrap();
        let mut ev = Evaluator::new(&t, &caps).unwrap();
        let d = ev.domain(&SimpleType::arrow(SimpleType::Ground, SimpleType::Ground)).unwrap();
        assert_eq!(d.elems.len(), 36);
        let f = parse_hfl("((\\g : Pr -> Pr . (g P)) (\\x : Pr . <> x))").unwrap();
        let v = ev.eval_formula(&Interpretation::new(), &f).unwrap();
        assert_eq!(v, SemValue::Set(0b10));
    }

    #[test]
    fn caps_are_enforced() {
        let t = tree();
        let f = parse_hfl("((\\g : Pr -> Pr . (g P)) (\\x : Pr . <> x))").unwrap();
        assert!(matches!(check_hfl(&t, 0, &f, &Caps::default()), Err(DenotError::CapExceeded(_))));
        assert!(matches!(
            check_hfl(&t, 0, &parse_hfl("Q").unwrap(), &Caps::default()),
            Err(DenotError::UnknownProposition(_))
        ));
    }

    #[test]
    fn interpretation_binds_free_variables() {
        let t = tree();
        let eta = Interpretation::new().bind("x", SimpleType::Ground, SemValue::Set(0b100));
        let v = eval_hfl(&t, &eta, &parse_hfl("<> x").unwrap(), &Caps::default()).unwrap();
        assert_eq!(v, SemValue::Set(0b110));
        assert!(matches!(eval_hfl(&t, &Interpretation::new(), &parse_hfl("<> x").unwrap(), &Caps::default()), Err(DenotError::Unbound(_))));
    }
}
