//! Seeded generators for automata, regular trees and formulas, plus the
//! exhaustive enumeration of small trees.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::apka::{normalize_priorities, Apka, StateDecl};
use crate::syntax::{FixKind, Formula, SimpleType};
use crate::trees::{Dir, LabelSet, NodeRef, RegularTree};

/// Shape limits for [`random_apka`].
#[derive(Debug, Clone)]
pub struct ApkaShape {
    pub props: Vec<String>,
    pub max_states: usize,
    pub max_args: usize,
    pub max_priority: u32,
    /// Depth budget of each body.
    pub depth: usize,
    /// Relative weight of `tt`, `ff` and literals among the leaves.
    pub leaf_terminal_weight: u32,
}

impl Default for ApkaShape {
    fn default() -> Self {
        ApkaShape {
            props: vec!["P".into(), "Q".into()],
            max_states: 4,
            max_args: 2,
            max_priority: 3,
            depth: 4,
            leaf_terminal_weight: 2,
        }
    }
}

fn ground_args(m: usize) -> SimpleType {
    SimpleType::from_args(vec![SimpleType::Ground; m])
}

/// A random valid automaton of order at most 1: every argument is ground.
/// The initial state is ground and priorities are normalized.
pub fn random_apka<R: Rng>(rng: &mut R, shape: &ApkaShape) -> Apka {
    let k = rng.gen_range(1..=shape.max_states.max(1));
    let names: Vec<String> = (0..k).map(|i| format!("S{i}")).collect();
    let arity: Vec<usize> = (0..k).map(|i| if i == 0 { 0 } else { rng.gen_range(0..=shape.max_args) }).collect();
    let prios: Vec<u32> = (0..k).map(|_| rng.gen_range(0..=shape.max_priority)).collect();
    let prios = normalize_priorities(&prios);
    let mut states = Vec::new();
    for i in 0..k {
        let args: Vec<(String, SimpleType)> = (0..arity[i]).map(|j| (format!("x{j}"), SimpleType::Ground)).collect();
        let arg_names: Vec<String> = args.iter().map(|a| a.0.clone()).collect();
        let gen = BodyGen { names: &names, arity: &arity, args: &arg_names, shape };
        let body = gen.ground(rng, shape.depth);
        states.push(StateDecl { name: names[i].clone(), ty: ground_args(arity[i]), priority: prios[i], args, body });
    }
    Apka { props: shape.props.clone(), init: names[0].clone(), states }
}

struct BodyGen<'a> {
    names: &'a [String],
    arity: &'a [usize],
    args: &'a [String],
    shape: &'a ApkaShape,
}

impl BodyGen<'_> {
    fn leaf<R: Rng>(&self, rng: &mut R) -> Formula {
        let w = self.shape.leaf_terminal_weight;
        let ground_states: Vec<&String> = self.names.iter().zip(self.arity).filter(|(_, &a)| a == 0).map(|(n, _)| n).collect();
        let weights = [w, w, 2 * w, 4, 4 * (!ground_states.is_empty()) as u32];
        let total: u32 = weights.iter().sum();
        let mut pick = rng.gen_range(0..total);
        let mut choice = 0;
        for (i, &wt) in weights.iter().enumerate() {
            if pick < wt {
                choice = i;
                break;
            }
            pick -= wt;
        }
        match choice {
            0 => Formula::True,
            1 => Formula::False,
            2 => {
                let p = self.shape.props.choose(rng).cloned().unwrap_or_else(|| "P".into());
                if rng.gen() {
                    Formula::prop(p)
                } else {
                    Formula::neg_prop(p)
                }
            }
            3 if !self.args.is_empty() => Formula::var(self.args.choose(rng).unwrap().clone()),
            _ if !ground_states.is_empty() => Formula::var((*ground_states.choose(rng).unwrap()).clone()),
            _ => Formula::True,
        }
    }

    fn ground<R: Rng>(&self, rng: &mut R, depth: usize) -> Formula {
        if depth == 0 {
            return self.leaf(rng);
        }
        match rng.gen_range(0..9) {
            0 => self.leaf(rng),
            1 => Formula::diamond(self.ground(rng, depth - 1)),
            2 => Formula::boxed(self.ground(rng, depth - 1)),
            3 => Formula::or(self.ground(rng, depth - 1), self.ground(rng, depth - 1)),
            4 => Formula::and(self.ground(rng, depth - 1), self.ground(rng, depth - 1)),
            _ => {
                // a state applied to all of its arguments, modalities keeping
                // recursion guarded
                let x = rng.gen_range(0..self.names.len());
                let mut f = Formula::var(self.names[x].clone());
                for _ in 0..self.arity[x] {
                    f = Formula::app(f, self.ground(rng, depth - 1));
                }
                if rng.gen_bool(0.5) {
                    f
                } else if rng.gen() {
                    Formula::diamond(f)
                } else {
                    Formula::boxed(f)
                }
            }
        }
    }
}

/// A random regular tree with between 1 and `max_states` tree-states.
pub fn random_tree<R: Rng>(rng: &mut R, props: &[String], max_states: usize) -> RegularTree {
    let k = rng.gen_range(1..=max_states.max(1));
    let labels = (0..k)
        .map(|_| LabelSet((0..props.len()).filter(|_| rng.gen()).fold(0, |acc, i| acc | (1 << i))))
        .collect();
    let left = (0..k).map(|_| rng.gen_range(0..k) as NodeRef).collect();
    let right = (0..k).map(|_| rng.gen_range(0..k) as NodeRef).collect();
    RegularTree { props: props.to_vec(), names: (0..k).map(|i| format!("n{i}")).collect(), labels, left, right, root: 0 }
}

/// Every regular tree with exactly `k` tree-states over `props`, rooted at
/// the first state. Unreachable states are included.
pub fn all_trees(props: &[String], k: usize) -> impl Iterator<Item = RegularTree> + '_ {
    let label_choices = 1u64 << props.len();
    let succ = (k as u64).pow(2 * k as u32);
    let labels = label_choices.pow(k as u32);
    (0..succ * labels).map(move |code| {
        let (mut s, mut l) = (code % succ, code / succ);
        let mut left = Vec::with_capacity(k);
        let mut right = Vec::with_capacity(k);
        let mut lab = Vec::with_capacity(k);
        for _ in 0..k {
            left.push((s % k as u64) as NodeRef);
            s /= k as u64;
            right.push((s % k as u64) as NodeRef);
            s /= k as u64;
            lab.push(LabelSet(l % label_choices));
            l /= label_choices;
        }
        RegularTree { props: props.to_vec(), names: (0..k).map(|i| format!("n{i}")).collect(), labels: lab, left, right, root: 0 }
    })
}

/// A copy of `t` that differs from it exactly at the end of `path`: the
/// path is unrolled into fresh tree-states and the label of proposition
/// `prop` is flipped at its last node. All other nodes keep their labels.
pub fn flip_along(t: &RegularTree, path: &[Dir], prop: usize) -> RegularTree {
    let mut out = t.clone();
    let mut orig = t.root;
    let base = t.len() as NodeRef;
    for (j, &d) in path.iter().enumerate() {
        let copy = base + j as NodeRef;
        out.names.push(format!("u{j}"));
        out.labels.push(t.labels[orig as usize]);
        out.left.push(t.left[orig as usize]);
        out.right.push(t.right[orig as usize]);
        let next = t.succ(orig, d);
        let child = base + j as NodeRef + 1;
        match d {
            Dir::Left => out.left[copy as usize] = child,
            Dir::Right => out.right[copy as usize] = child,
        }
        orig = next;
    }
    out.names.push(format!("u{}", path.len()));
    out.labels.push(LabelSet(t.labels[orig as usize].0 ^ (1 << prop)));
    out.left.push(t.left[orig as usize]);
    out.right.push(t.right[orig as usize]);
    out.root = base;
    out
}

/// Shape limits for [`random_hfl`].
#[derive(Debug, Clone)]
pub struct HflShape {
    pub props: Vec<String>,
    pub depth: usize,
    /// Allow fixpoints and lambdas of type `Pr -> Pr`.
    pub first_order: bool,
}

impl Default for HflShape {
    fn default() -> Self {
        HflShape { props: vec!["P".into(), "Q".into()], depth: 4, first_order: true }
    }
}

/// A random closed, well-named HFL formula of type `Pr` and order at most 1.
pub fn random_hfl<R: Rng>(rng: &mut R, shape: &HflShape) -> Formula {
    let mut g = HflGen { shape, fresh: 0, scope: Vec::new() };
    g.ground(rng, shape.depth)
}

struct HflGen<'a> {
    shape: &'a HflShape,
    fresh: usize,
    scope: Vec<(String, SimpleType)>,
}

impl HflGen<'_> {
    fn name(&mut self, stem: &str) -> String {
        self.fresh += 1;
        format!("{stem}{}", self.fresh)
    }

    fn vars_of(&self, t: &SimpleType) -> Vec<String> {
        self.scope.iter().filter(|(_, u)| u == t).map(|(n, _)| n.clone()).collect()
    }

    fn leaf<R: Rng>(&mut self, rng: &mut R) -> Formula {
        let vars = self.vars_of(&SimpleType::Ground);
        match rng.gen_range(0..6) {
            0 => Formula::True,
            1 => Formula::False,
            2 | 3 if !vars.is_empty() => Formula::var(vars.choose(rng).unwrap().clone()),
            n => {
                let p = self.shape.props.choose(rng).cloned().unwrap_or_else(|| "P".into());
                if n % 2 == 0 {
                    Formula::prop(p)
                } else {
                    Formula::neg_prop(p)
                }
            }
        }
    }

    fn bind<R: Rng>(&mut self, rng: &mut R, name: String, t: SimpleType, body: impl FnOnce(&mut Self, &mut R) -> Formula) -> Formula {
        self.scope.push((name, t));
        let f = body(self, rng);
        self.scope.pop();
        f
    }

    fn ground<R: Rng>(&mut self, rng: &mut R, depth: usize) -> Formula {
        if depth == 0 {
            return self.leaf(rng);
        }
        let choices = if self.shape.first_order { 10 } else { 8 };
        match rng.gen_range(0..choices) {
            0 => self.leaf(rng),
            1 => Formula::diamond(self.ground(rng, depth - 1)),
            2 => Formula::boxed(self.ground(rng, depth - 1)),
            3 => Formula::or(self.ground(rng, depth - 1), self.ground(rng, depth - 1)),
            4 => Formula::and(self.ground(rng, depth - 1), self.ground(rng, depth - 1)),
            5..=7 => {
                let kind = if rng.gen() { FixKind::Mu } else { FixKind::Nu };
                let x = self.name("X");
                let body = self.bind(rng, x.clone(), SimpleType::Ground, |g, r| g.ground(r, depth - 1));
                Formula::fix(kind, x, SimpleType::Ground, body)
            }
            _ => {
                let f = self.unary(rng, depth - 1);
                Formula::app(f, self.ground(rng, depth - 1))
            }
        }
    }

    /// A term of type `Pr -> Pr`.
    fn unary<R: Rng>(&mut self, rng: &mut R, depth: usize) -> Formula {
        let t = SimpleType::arrow(SimpleType::Ground, SimpleType::Ground);
        let vars = self.vars_of(&t);
        match rng.gen_range(0..3) {
            0 if !vars.is_empty() => Formula::var(vars.choose(rng).unwrap().clone()),
            1 => {
                let kind = if rng.gen() { FixKind::Mu } else { FixKind::Nu };
                let f = self.name("F");
                let body = self.bind(rng, f.clone(), t.clone(), |g, r| g.unary(r, depth.saturating_sub(1)));
                Formula::fix(kind, f, t, body)
            }
            _ => {
                let x = self.name("x");
                let body = self.bind(rng, x.clone(), SimpleType::Ground, |g, r| g.ground(r, depth.saturating_sub(1)));
                Formula::lambda(x, SimpleType::Ground, body)
            }
        }
    }
}
