//! Translations between closed HFL formulas and automata.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::apka::{Apka, InvalidApka, Parity, StateDecl};
use crate::syntax::{analyze_binding, typecheck, Dialect, FixKind, Formula, SimpleType, TypeError, TypingContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("formula is not closed: free variables {0:?}")]
    NotClosed(Vec<String>),
    #[error("formula is not well-named: some variable has more than one binder")]
    NotWellNamed,
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("formula has type {0}, expected Pr")]
    NotGround(SimpleType),
    #[error(
        "unsupported precedence: {operator} (priority {operator_priority}) would be placed in operator position inside {inside} (priority {inside_priority})"
    )]
    UnsupportedPrecedence { operator: String, operator_priority: u32, inside: String, inside_priority: u32 },
    #[error(transparent)]
    Invalid(#[from] InvalidApka),
}

struct Namer {
    used: BTreeSet<String>,
}

impl Namer {
    fn new(f: &Formula) -> Self {
        let mut used = BTreeSet::new();
        f.visit(&mut |g| match g {
            Formula::Var(n) | Formula::Prop(n) | Formula::NegProp(n) => {
                used.insert(n.clone());
            }
            Formula::Lambda(n, ..) | Formula::Mu(n, ..) | Formula::Nu(n, ..) => {
                used.insert(n.clone());
            }
            _ => {}
        });
        Namer { used }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        let mut k = 0;
        loop {
            let name = format!("{prefix}{k}");
            if self.used.insert(name.clone()) {
                return name;
            }
            k += 1;
        }
    }
}

/// `(name, type, is_lambda)` for every binder in scope.
type Scope = Vec<(String, SimpleType, bool)>;

fn type_of(f: &Formula, scope: &mut Scope) -> SimpleType {
    match f {
        Formula::Var(n) | Formula::Prop(n) => {
            scope.iter().rev().find(|(m, ..)| m == n).map(|(_, t, _)| t.clone()).unwrap_or(SimpleType::Ground)
        }
        Formula::App(l, _) => match type_of(l, scope) {
            SimpleType::Arrow(_, r) => (*r).clone(),
            SimpleType::Ground => SimpleType::Ground,
        },
        Formula::Lambda(x, t, b) => {
            scope.push((x.clone(), t.clone(), true));
            let r = type_of(b, scope);
            scope.pop();
            SimpleType::arrow(t.clone(), r)
        }
        Formula::Mu(_, t, _) | Formula::Nu(_, t, _) => t.clone(),
        _ => SimpleType::Ground,
    }
}

/// Rebuilds a binder-free node from transformed children.
fn map_children<E>(f: &Formula, g: &mut impl FnMut(&Formula) -> Result<Formula, E>) -> Result<Formula, E> {
    Ok(match f {
        Formula::Diamond(c) => Formula::diamond(g(c)?),
        Formula::Box(c) => Formula::boxed(g(c)?),
        Formula::Or(l, r) => Formula::or(g(l)?, g(r)?),
        Formula::And(l, r) => Formula::and(g(l)?, g(r)?),
        Formula::App(l, r) => Formula::app(g(l)?, g(r)?),
        other => other.clone(),
    })
}

fn fix_kind(f: &Formula) -> FixKind {
    f.as_fix().map(|(k, ..)| k).unwrap_or(FixKind::Mu)
}

/// Wraps every lambda that does not continue a fixpoint's lambda prefix in
/// a vacuous greatest fixpoint.
fn pad(f: &Formula, scope: &mut Scope, in_prefix: bool, namer: &mut Namer) -> Formula {
    match f {
        Formula::Lambda(x, t, b) => {
            scope.push((x.clone(), t.clone(), true));
            let nb = pad(b, scope, true, namer);
            scope.pop();
            let lam = Formula::lambda(x.clone(), t.clone(), nb);
            if in_prefix {
                lam
            } else {
                let ty = type_of(&lam, scope);
                Formula::nu(namer.fresh("_pad"), ty, lam)
            }
        }
        Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
            scope.push((x.clone(), t.clone(), false));
            let nb = pad(b, scope, true, namer);
            scope.pop();
            Formula::fix(fix_kind(f), x.clone(), t.clone(), nb)
        }
        other => map_children::<()>(other, &mut |c| Ok(pad(c, scope, false, namer))).unwrap(),
    }
}

/// Turns lambda variables free in a fixpoint into extra leading parameters
/// of that fixpoint, outermost fixpoints first.
fn lift(f: &Formula, scope: &mut Scope, namer: &mut Namer) -> Formula {
    match f {
        Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
            let free: Vec<(String, SimpleType)> = scope
                .iter()
                .filter(|(n, _, is_lambda)| *is_lambda && f.occurs_free(n))
                .map(|(n, t, _)| (n.clone(), t.clone()))
                .collect();
            if free.is_empty() {
                scope.push((x.clone(), t.clone(), false));
                let nb = lift(b, scope, namer);
                scope.pop();
                return Formula::fix(fix_kind(f), x.clone(), t.clone(), nb);
            }
            let primes: Vec<String> = free.iter().map(|_| namer.fresh("_cl")).collect();
            let mut body = (**b).clone();
            for ((old, _), new) in free.iter().zip(&primes) {
                body = body.substitute(old, &Formula::var(new.clone()));
            }
            let call = primes.iter().fold(Formula::var(x.clone()), |acc, p| Formula::app(acc, Formula::var(p.clone())));
            body = body.substitute(x, &call);
            let mut ty = t.clone();
            for ((_, ft), p) in free.iter().zip(&primes).rev() {
                body = Formula::lambda(p.clone(), ft.clone(), body);
                ty = SimpleType::arrow(ft.clone(), ty);
            }
            let lifted = lift(&Formula::fix(fix_kind(f), x.clone(), ty, body), scope, namer);
            free.iter().fold(lifted, |acc, (n, _)| Formula::app(acc, Formula::var(n.clone())))
        }
        Formula::Lambda(x, t, b) => {
            scope.push((x.clone(), t.clone(), true));
            let nb = lift(b, scope, namer);
            scope.pop();
            Formula::lambda(x.clone(), t.clone(), nb)
        }
        other => map_children::<()>(other, &mut |c| Ok(lift(c, scope, namer))).unwrap(),
    }
}

/// Gives every fixpoint a lambda prefix of full arity.
fn eta(f: &Formula, scope: &mut Scope, namer: &mut Namer) -> Formula {
    match f {
        Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
            let arg_tys = t.args();
            let mut prefix = Vec::new();
            let mut inner: &Formula = b;
            while let Formula::Lambda(y, yt, yb) = inner {
                if prefix.len() == arg_tys.len() {
                    break;
                }
                prefix.push((y.clone(), yt.clone()));
                inner = yb;
            }
            let mut inner = inner.clone();
            for ty in &arg_tys[prefix.len()..] {
                let g = namer.fresh("_eta");
                inner = Formula::app(inner, Formula::var(g.clone()));
                prefix.push((g, ty.clone()));
            }
            scope.push((x.clone(), t.clone(), false));
            for (y, yt) in &prefix {
                scope.push((y.clone(), yt.clone(), true));
            }
            let mut nb = eta(&inner, scope, namer);
            scope.truncate(scope.len() - prefix.len() - 1);
            for (y, yt) in prefix.into_iter().rev() {
                nb = Formula::lambda(y, yt, nb);
            }
            Formula::fix(fix_kind(f), x.clone(), t.clone(), nb)
        }
        Formula::Lambda(x, t, b) => {
            scope.push((x.clone(), t.clone(), true));
            let nb = eta(b, scope, namer);
            scope.pop();
            Formula::lambda(x.clone(), t.clone(), nb)
        }
        other => map_children::<()>(other, &mut |c| Ok(eta(c, scope, namer))).unwrap(),
    }
}

/// Replaces nested fixpoints by their variables and records one state per
/// fixpoint (preorder). Returns the stripped formula and the largest
/// priority of any fixpoint inside it.
fn extract(f: &Formula, states: &mut Vec<Option<StateDecl>>) -> (Formula, Option<u32>) {
    match f {
        Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
            let slot = states.len();
            states.push(None);
            let mut args = Vec::new();
            let mut inner: &Formula = b;
            while let Formula::Lambda(y, yt, yb) = inner {
                args.push((y.clone(), yt.clone()));
                inner = yb;
            }
            let (body, sub) = extract(inner, states);
            let floor = sub.unwrap_or(0);
            let priority = if !b.occurs_free(x) {
                floor
            } else {
                let want = match fix_kind(f) {
                    FixKind::Mu => Parity::Odd,
                    FixKind::Nu => Parity::Even,
                };
                if Parity::of(floor) == want {
                    floor
                } else {
                    floor + 1
                }
            };
            states[slot] = Some(StateDecl { name: x.clone(), ty: t.clone(), priority, args, body });
            (Formula::var(x.clone()), Some(priority))
        }
        Formula::Lambda(..) => unreachable!("every lambda sits in a fixpoint prefix after padding"),
        Formula::Diamond(c) | Formula::Box(c) => {
            let (c2, m) = extract(c, states);
            (map_children::<()>(f, &mut |_| Ok(c2.clone())).unwrap(), m)
        }
        Formula::Or(l, r) | Formula::And(l, r) | Formula::App(l, r) => {
            let (l2, ml) = extract(l, states);
            let (r2, mr) = extract(r, states);
            let out = match f {
                Formula::Or(..) => Formula::or(l2, r2),
                Formula::And(..) => Formula::and(l2, r2),
                _ => Formula::app(l2, r2),
            };
            (out, ml.max(mr))
        }
        other => (other.clone(), None),
    }
}

fn props_of(f: &Formula) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    f.visit(&mut |g| {
        if let Formula::Prop(p) | Formula::NegProp(p) = g {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
    });
    out
}

fn check_closed(f: &Formula) -> Result<(), TranslateError> {
    let b = analyze_binding(f);
    if !b.is_closed() {
        let free = b.free_lambda_vars.iter().chain(&b.free_fixpoint_vars).cloned().collect();
        return Err(TranslateError::NotClosed(free));
    }
    if !b.well_named {
        return Err(TranslateError::NotWellNamed);
    }
    let t = typecheck(&TypingContext::new(), f, Dialect::Hfl)?;
    if !t.is_ground() {
        return Err(TranslateError::NotGround(t));
    }
    Ok(())
}

/// The normalized formula handed to state extraction: padded, lifted,
/// eta-long and wrapped in the initial fixpoint.
pub fn normalize_hfl(f: &Formula) -> Result<Formula, TranslateError> {
    check_closed(f)?;
    let mut namer = Namer::new(f);
    let mut scope = Scope::new();
    let g = pad(f, &mut scope, false, &mut namer);
    let g = lift(&g, &mut scope, &mut namer);
    let g = eta(&g, &mut scope, &mut namer);
    let init = if namer.used.contains("I") { namer.fresh("_init") } else { "I".to_string() };
    Ok(Formula::nu(init, SimpleType::Ground, g))
}

/// Translates a closed, well-named formula of type `Pr` into an automaton
/// whose initial state is a vacuous wrapper around the formula.
pub fn hfl_to_apka(f: &Formula) -> Result<Apka, TranslateError> {
    let g = normalize_hfl(f)?;
    let mut states = Vec::new();
    extract(&g, &mut states);
    let states: Vec<StateDecl> = states.into_iter().map(Option::unwrap).collect();
    let a = Apka { props: props_of(f), init: states[0].name.clone(), states };
    let report = a.validate();
    if !report.is_empty() {
        return Err(InvalidApka(report).into());
    }
    Ok(a)
}

fn state_fix(s: &StateDecl, def: Formula) -> Formula {
    let kind = match Parity::of(s.priority) {
        Parity::Odd => FixKind::Mu,
        Parity::Even => FixKind::Nu,
    };
    Formula::fix(kind, s.name.clone(), s.ty.clone(), def)
}

/// Rejects placing a closed higher-priority fixpoint `Z` in operator
/// position below a lower-priority binder.
fn check_precedence(
    f: &Formula,
    a: &Apka,
    inside: (&str, u32),
    bound: &mut Vec<String>,
) -> Result<(), TranslateError> {
    let prio = |n: &str| a.state(n).map(|s| s.priority);
    match f {
        Formula::App(l, r) => {
            if let Formula::Var(z) = &**l {
                if !bound.contains(z) {
                    if let Some(pz) = prio(z) {
                        if pz > inside.1 {
                            return Err(TranslateError::UnsupportedPrecedence {
                                operator: z.clone(),
                                operator_priority: pz,
                                inside: inside.0.to_string(),
                                inside_priority: inside.1,
                            });
                        }
                    }
                }
            }
            check_precedence(l, a, inside, bound)?;
            check_precedence(r, a, inside, bound)
        }
        Formula::Mu(x, _, b) | Formula::Nu(x, _, b) => {
            bound.push(x.clone());
            let here = prio(x).map(|p| (x.as_str(), p)).unwrap_or(inside);
            let res = check_precedence(b, a, here, bound);
            bound.pop();
            res
        }
        Formula::Lambda(x, _, b) => {
            bound.push(x.clone());
            let res = check_precedence(b, a, inside, bound);
            bound.pop();
            res
        }
        Formula::Diamond(c) | Formula::Box(c) => check_precedence(c, a, inside, bound),
        Formula::Or(l, r) | Formula::And(l, r) => {
            check_precedence(l, a, inside, bound)?;
            check_precedence(r, a, inside, bound)
        }
        _ => Ok(()),
    }
}

/// Drops fixpoint binders whose variable does not occur in their body.
pub fn unwrap_vacuous(f: &Formula) -> Formula {
    match f {
        Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
            if b.occurs_free(x) {
                Formula::fix(fix_kind(f), x.clone(), t.clone(), unwrap_vacuous(b))
            } else {
                unwrap_vacuous(b)
            }
        }
        Formula::Lambda(x, t, b) => Formula::lambda(x.clone(), t.clone(), unwrap_vacuous(b)),
        other => map_children::<()>(other, &mut |c| Ok(unwrap_vacuous(c))).unwrap(),
    }
}

/// Renames repeated binders to `name'k` so every variable has one binder.
pub fn rename_apart(f: &Formula) -> Formula {
    fn go(f: &Formula, used: &mut BTreeSet<String>) -> Formula {
        let rebind = |x: &String, b: &Formula, used: &mut BTreeSet<String>| -> (String, Formula) {
            if used.insert(x.clone()) {
                return (x.clone(), b.clone());
            }
            let mut k = 1;
            let fresh = loop {
                let cand = format!("{x}'{k}");
                if used.insert(cand.clone()) {
                    break cand;
                }
                k += 1;
            };
            let b2 = b.substitute(x, &Formula::var(fresh.clone()));
            (fresh, b2)
        };
        match f {
            Formula::Lambda(x, t, b) => {
                let (x2, b2) = rebind(x, b, used);
                Formula::lambda(x2, t.clone(), go(&b2, used))
            }
            Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
                let (x2, b2) = rebind(x, b, used);
                Formula::fix(fix_kind(f), x2, t.clone(), go(&b2, used))
            }
            other => map_children::<()>(other, &mut |c| Ok(go(c, used))).unwrap(),
        }
    }
    let mut used: BTreeSet<String> = f.free_names();
    go(f, &mut used)
}

/// Eliminates states in ascending priority order (declaration order breaks
/// ties), then substitutes the closed solutions back into the initial state.
/// Free states of an eliminated fixpoint always come later in that order, so
/// the back-substitution terminates.
pub fn apka_to_hfl(a: &Apka) -> Result<Formula, TranslateError> {
    let report = a.validate();
    if !report.is_empty() {
        return Err(InvalidApka(report).into());
    }
    let n = a.states.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (a.states[i].priority, i));
    let mut defs: Vec<Formula> = a
        .states
        .iter()
        .map(|s| s.args.iter().rev().fold(s.body.clone(), |b, (x, t)| Formula::lambda(x.clone(), t.clone(), b)))
        .collect();
    let mut fixes: Vec<Option<Formula>> = vec![None; n];
    for (pos, &x) in order.iter().enumerate() {
        let fx = state_fix(&a.states[x], defs[x].clone());
        for &y in &order[pos + 1..] {
            defs[y] = defs[y].substitute(&a.states[x].name, &fx);
        }
        fixes[x] = Some(fx);
    }
    fn close(
        x: usize,
        a: &Apka,
        fixes: &[Formula],
        closed: &mut Vec<Option<Formula>>,
    ) -> Result<Formula, TranslateError> {
        if let Some(f) = &closed[x] {
            return Ok(f.clone());
        }
        let s = &a.states[x];
        check_precedence(&fixes[x], a, (&s.name, s.priority), &mut Vec::new())?;
        let mut out = fixes[x].clone();
        for z in fixes[x].free_names() {
            if let Some(zi) = a.state_index(&z) {
                let cz = close(zi, a, fixes, closed)?;
                out = out.substitute(&z, &cz);
            }
        }
        closed[x] = Some(out.clone());
        Ok(out)
    }
    let fixes: Vec<Formula> = fixes.into_iter().map(Option::unwrap).collect();
    let mut closed: Vec<Option<Formula>> = vec![None; n];
    let init = a.state_index(&a.init).unwrap();
    let f = close(init, a, &fixes, &mut closed)?;
    Ok(rename_apart(&unwrap_vacuous(&f)))
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
    const EX1_HFL: &str = "((mu X : Pr -> Pr . \\x : Pr . (<> x) \\/ ([] (nu Y : Pr . (X Y)))) !P)";

    #[test]
    fn example_one_to_automaton() {
        let a = hfl_to_apka(&parse_hfl(EX1_HFL).unwrap()).unwrap();
        assert_eq!(a, Apka::parse(EX1).unwrap());
    }

    #[test]
    fn example_one_to_formula() {
        let f = apka_to_hfl(&Apka::parse(EX1).unwrap()).unwrap();
        assert_eq!(f, parse_hfl(EX1_HFL).unwrap());
    }

    #[test]
    fn simple_mu() {
        let a = hfl_to_apka(&parse_hfl("mu X : Pr . <> X").unwrap()).unwrap();
        assert_eq!(a.states.len(), 2);
        assert_eq!(a.init, "I");
        assert_eq!(a.state("X").unwrap().priority % 2, 1);
    }

    #[test]
    fn padding_lifting_eta() {
        // the lambda is padded; Y uses the lambda variable x and is lifted
        let f = parse_hfl("((\\x : Pr . mu Y : Pr . x \\/ <> Y) P)").unwrap();
        let a = hfl_to_apka(&f).unwrap();
        assert!(a.validate().is_empty());
        let pad = a.state("_pad0").unwrap();
        assert_eq!(pad.args.len(), 1);
        let y = a.state("Y").unwrap();
        assert_eq!(y.ty.to_string(), "Pr -> Pr");
        assert_eq!(y.args[0].0, "_cl0");
        assert_eq!(y.body.to_string(), "_cl0 \\/ (<> (Y _cl0))");
        // a fixpoint of function type without its own lambdas is eta-expanded
        let g = parse_hfl("((mu Z : Pr -> Pr . (\\x : Pr . <> x)) P)").unwrap();
        let b = hfl_to_apka(&g).unwrap();
        let z = b.state("Z").unwrap();
        assert_eq!(z.args.len(), 1);
        assert!(b.order() <= g.binder_order());
    }

    #[test]
    fn minimal_priorities() {
        let f = parse_hfl("nu A : Pr . mu B : Pr . (<> A) \\/ ([] B)").unwrap();
        let a = hfl_to_apka(&f).unwrap();
        assert_eq!(a.state("B").unwrap().priority, 1);
        assert_eq!(a.state("A").unwrap().priority, 2);
        assert_eq!(a.state("I").unwrap().priority, 2);
    }

    #[test]
    fn rejects_open_and_badly_named() {
        assert!(matches!(hfl_to_apka(&parse_hfl("<> x").unwrap()), Err(TranslateError::NotClosed(_))));
        let f = parse_hfl("(mu X : Pr . <> X) \\/ (mu X : Pr . [] X)").unwrap();
        assert_eq!(hfl_to_apka(&f), Err(TranslateError::NotWellNamed));
        assert!(matches!(hfl_to_apka(&parse_hfl("\\x : Pr . x").unwrap()), Err(TranslateError::NotGround(_))));
    }

    #[test]
    fn precedence_is_refused() {
        let a = Apka::parse(
            "props P
init I
state I : Pr { prio 0 ; body (Z P) }
state Z : Pr -> Pr { prio 1 ; args z:Pr ; body z \\/ (<> (Z z)) }
",
        )
        .unwrap();
        assert!(matches!(apka_to_hfl(&a), Err(TranslateError::UnsupportedPrecedence { .. })));
    }

    #[test]
    fn renaming_apart() {
        let f = parse_hfl("(\\x : Pr . x) \\/ (\\x : Pr . <> x)").unwrap();
        let g = rename_apart(&f);
        assert_eq!(g.to_string(), "(\\x : Pr . x) \\/ (\\x'1 : Pr . <> x'1)");
    }
}
