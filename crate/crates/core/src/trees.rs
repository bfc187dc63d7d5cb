//! Labeled fully infinite binary trees: finite-state regular trees, lazily
//! generated trees, depth-bounded prefixes and the `2^-i` metric.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::caps::Caps;
use crate::syntax::{self, Parser, SyntaxError, Tok};

/// Handle to a node of some tree; meaning is local to the tree that issued it.
pub type NodeRef = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Left,
    Right,
}

impl Dir {
    pub fn index(self) -> usize {
        match self {
            Dir::Left => 0,
            Dir::Right => 1,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dir::Left => write!(f, "L"),
            Dir::Right => write!(f, "R"),
        }
    }
}

/// Set of propositions, bit `i` standing for the tree's `i`-th proposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelSet(pub u64);

impl LabelSet {
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }
    pub fn with(self, i: usize) -> LabelSet {
        LabelSet(self.0 | 1 << i)
    }
    pub fn single(i: usize) -> LabelSet {
        LabelSet(1 << i)
    }
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn names(self, props: &[String]) -> Vec<String> {
        (0..props.len()).filter(|&i| self.contains(i)).map(|i| props[i].clone()).collect()
    }
}

/// A possibly non-regular tree whose nodes are produced on demand.
pub trait LazyTree {
    fn props(&self) -> &[String];
    fn root(&mut self) -> NodeRef;
    fn label(&mut self, n: NodeRef) -> LabelSet;
    fn child(&mut self, n: NodeRef, d: Dir) -> NodeRef;
    /// Human-readable node name for traces.
    fn node_name(&self, n: NodeRef) -> String {
        format!("v{n}")
    }
}

impl LazyTree for Box<dyn LazyTree> {
    fn props(&self) -> &[String] {
        (**self).props()
    }
    fn root(&mut self) -> NodeRef {
        (**self).root()
    }
    fn label(&mut self, n: NodeRef) -> LabelSet {
        (**self).label(n)
    }
    fn child(&mut self, n: NodeRef, d: Dir) -> NodeRef {
        (**self).child(n, d)
    }
    fn node_name(&self, n: NodeRef) -> String {
        (**self).node_name(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularTree {
    pub props: Vec<String>,
    pub names: Vec<String>,
    pub labels: Vec<LabelSet>,
    pub left: Vec<NodeRef>,
    pub right: Vec<NodeRef>,
    pub root: NodeRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("node `{node}` refers to undeclared node `{target}`")]
    DanglingSuccessor { node: String, target: String },
    #[error("node `{node}` is missing its {which} successor")]
    MissingSuccessor { node: String, which: &'static str },
    #[error("node `{node}` uses undeclared proposition `{prop}`")]
    UnknownProposition { node: String, prop: String },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown tree-state `{0}`")]
    UnknownNode(String),
    #[error("at most 64 propositions are supported")]
    TooManyProps,
    #[error("proposition sets differ: {0:?} vs {1:?}")]
    PropMismatch(Vec<String>, Vec<String>),
    #[error("prefix depth {depth} exceeds the cap {cap}")]
    DepthCap { depth: usize, cap: usize },
    #[error("malformed prefix: {0}")]
    BadPrefix(String),
}

impl RegularTree {
    pub fn new(
        props: Vec<String>,
        nodes: Vec<(String, Vec<String>, String, String)>,
        root: &str,
    ) -> Result<RegularTree, TreeError> {
        if props.len() > 64 {
            return Err(TreeError::TooManyProps);
        }
        let names: Vec<String> = nodes.iter().map(|n| n.0.clone()).collect();
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(TreeError::DuplicateNode(n.clone()));
            }
        }
        let find = |node: &str, target: &str| -> Result<NodeRef, TreeError> {
            names
                .iter()
                .position(|n| n == target)
                .map(|i| i as NodeRef)
                .ok_or_else(|| TreeError::DanglingSuccessor { node: node.into(), target: target.into() })
        };
        let mut labels = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (name, ls, l, r) in &nodes {
            let mut set = LabelSet::default();
            for p in ls {
                let i = props
                    .iter()
                    .position(|q| q == p)
                    .ok_or_else(|| TreeError::UnknownProposition { node: name.clone(), prop: p.clone() })?;
                set = set.with(i);
            }
            labels.push(set);
            left.push(find(name, l)?);
            right.push(find(name, r)?);
        }
        let root = names
            .iter()
            .position(|n| n == root)
            .ok_or_else(|| TreeError::UnknownNode(root.to_string()))? as NodeRef;
        Ok(RegularTree { props, names, labels, left, right, root })
    }

    /// Parses the tree file format.
    pub fn parse(text: &str) -> Result<RegularTree, TreeError> {
        let mut p = Parser::new(syntax::lex(text)?);
        let mut props = None;
        let mut root = None;
        let mut nodes = Vec::new();
        while !p.at_eof() {
            if p.is_keyword("props") {
                p.bump();
                let mut list = Vec::new();
                while matches!(p.peek(), Tok::Ident(s) if s != "root" && s != "node" && s != "props") {
                    list.push(p.ident()?);
                }
                props = Some(list);
            } else if p.is_keyword("root") {
                p.bump();
                root = Some(p.ident()?);
            } else if p.is_keyword("node") {
                p.bump();
                nodes.push(parse_node(&mut p)?);
            } else {
                return Err(SyntaxError::new(p.pos(), format!("expected `props`, `root` or `node`, found {}", p.peek())).into());
            }
        }
        let props = props.ok_or(TreeError::Missing("props"))?;
        let root = root.ok_or(TreeError::Missing("root"))?;
        let mut full = Vec::new();
        for (name, labels, l, r) in nodes {
            let l = l.ok_or_else(|| TreeError::MissingSuccessor { node: name.clone(), which: "left" })?;
            let r = r.ok_or_else(|| TreeError::MissingSuccessor { node: name.clone(), which: "right" })?;
            full.push((name, labels, l, r));
        }
        RegularTree::new(props, full, &root)
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<NodeRef> {
        self.names.iter().position(|n| n == name).map(|i| i as NodeRef)
    }

    pub fn succ(&self, n: NodeRef, d: Dir) -> NodeRef {
        match d {
            Dir::Left => self.left[n as usize],
            Dir::Right => self.right[n as usize],
        }
    }

    pub fn prop_index(&self, p: &str) -> Option<usize> {
        self.props.iter().position(|q| q == p)
    }

    /// Same structure, rooted elsewhere.
    pub fn rerooted(&self, root: NodeRef) -> RegularTree {
        RegularTree { root, ..self.clone() }
    }
}

/// Node name, labels, left child, right child.
type NodeDecl = (String, Vec<String>, Option<String>, Option<String>);

fn parse_node(p: &mut Parser) -> Result<NodeDecl, SyntaxError> {
    let name = p.ident()?;
    p.expect(Tok::LBrace)?;
    let (mut labels, mut l, mut r) = (Vec::new(), None, None);
    loop {
        if *p.peek() == Tok::RBrace {
            p.bump();
            break;
        }
        if p.is_keyword("labels") {
            p.bump();
            while let Tok::Ident(_) = p.peek() {
                labels.push(p.ident()?);
            }
        } else if p.is_keyword("left") {
            p.bump();
            l = Some(p.ident()?);
        } else if p.is_keyword("right") {
            p.bump();
            r = Some(p.ident()?);
        } else {
            return p.err(format!("expected `labels`, `left`, `right` or `}}`, found {}", p.peek()));
        }
        match p.peek() {
            Tok::Semi => {
                p.bump();
            }
            Tok::RBrace => {}
            other => return p.err(format!("expected `;` or `}}`, found {other}")),
        }
    }
    Ok((name, labels, l, r))
}

impl fmt::Display for RegularTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "props")?;
        for p in &self.props {
            write!(f, " {p}")?;
        }
        writeln!(f)?;
        writeln!(f, "root {}", self.names[self.root as usize])?;
        for (i, name) in self.names.iter().enumerate() {
            write!(f, "node {name} {{ labels")?;
            for l in self.labels[i].names(&self.props) {
                write!(f, " {l}")?;
            }
            writeln!(
                f,
                " ; left {} ; right {} }}",
                self.names[self.left[i] as usize], self.names[self.right[i] as usize]
            )?;
        }
        Ok(())
    }
}

impl LazyTree for RegularTree {
    fn props(&self) -> &[String] {
        &self.props
    }
    fn root(&mut self) -> NodeRef {
        self.root
    }
    fn label(&mut self, n: NodeRef) -> LabelSet {
        self.labels[n as usize]
    }
    fn child(&mut self, n: NodeRef, d: Dir) -> NodeRef {
        self.succ(n, d)
    }
    fn node_name(&self, n: NodeRef) -> String {
        self.names[n as usize].clone()
    }
}

// ---------------------------------------------------------------------------
// Prefixes

/// Complete binary tree of labeled levels `0..=depth` in heap layout (node
/// `i` has children `2i+1`, `2i+2`); everything below is cut off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTree {
    pub props: Vec<String>,
    pub depth: usize,
    pub labels: Vec<LabelSet>,
}

impl PrefixTree {
    pub fn level_of(i: usize) -> usize {
        (usize::BITS - 1 - (i + 1).leading_zeros()) as usize
    }

    pub fn label_names(&self, i: usize) -> Vec<String> {
        self.labels[i].names(&self.props)
    }

    /// Restriction to the first `depth + 1` levels.
    pub fn truncate(&self, depth: usize) -> PrefixTree {
        let depth = depth.min(self.depth);
        PrefixTree { props: self.props.clone(), depth, labels: self.labels[..(1 << (depth + 1)) - 1].to_vec() }
    }

    /// Parses the s-expression form. Propositions are collected in order of
    /// first appearance.
    pub fn parse(text: &str) -> Result<PrefixTree, TreeError> {
        let toks = syntax::lex(text)?;
        let mut at = 0usize;
        let mut props: Vec<String> = Vec::new();
        #[derive(Debug)]
        enum Node {
            Cut,
            Inner(Vec<String>, Box<Node>, Box<Node>),
        }
        fn node(toks: &[(Tok, syntax::Pos)], at: &mut usize) -> Result<Node, TreeError> {
            match &toks[*at].0 {
                Tok::LParen => {
                    *at += 1;
                    if toks[*at].0 != Tok::LParen {
                        return Err(TreeError::BadPrefix(format!("expected label list at {}", toks[*at].1)));
                    }
                    *at += 1;
                    let mut labels = Vec::new();
                    while let Tok::Ident(s) = &toks[*at].0 {
                        labels.push(s.clone());
                        *at += 1;
                    }
                    if toks[*at].0 != Tok::RParen {
                        return Err(TreeError::BadPrefix(format!("unterminated label list at {}", toks[*at].1)));
                    }
                    *at += 1;
                    let l = node(toks, at)?;
                    let r = node(toks, at)?;
                    if toks[*at].0 != Tok::RParen {
                        return Err(TreeError::BadPrefix(format!("expected `)` at {}", toks[*at].1)));
                    }
                    *at += 1;
                    Ok(Node::Inner(labels, Box::new(l), Box::new(r)))
                }
                Tok::Hash => {
                    *at += 1;
                    Ok(Node::Cut)
                }
                other => Err(TreeError::BadPrefix(format!("unexpected {other} at {}", toks[*at].1))),
            }
        }
        let tree = node(&toks, &mut at)?;
        if toks[at].0 != Tok::Eof {
            return Err(TreeError::BadPrefix("trailing input".into()));
        }
        fn depth(n: &Node) -> Result<Option<usize>, TreeError> {
            match n {
                Node::Cut => Ok(None),
                Node::Inner(_, l, r) => {
                    let (dl, dr) = (depth(l)?, depth(r)?);
                    if dl != dr {
                        return Err(TreeError::BadPrefix("leaves at different depths".into()));
                    }
                    Ok(Some(dl.map_or(0, |d| d + 1)))
                }
            }
        }
        let d = depth(&tree)?.ok_or_else(|| TreeError::BadPrefix("empty prefix".into()))?;
        let mut labels = vec![LabelSet::default(); (1 << (d + 1)) - 1];
        let mut stack = vec![(&tree, 0usize)];
        while let Some((n, i)) = stack.pop() {
            if let Node::Inner(ls, l, r) = n {
                let mut set = LabelSet::default();
                for s in ls {
                    let k = match props.iter().position(|p| p == s) {
                        Some(k) => k,
                        None => {
                            props.push(s.clone());
                            props.len() - 1
                        }
                    };
                    if k >= 64 {
                        return Err(TreeError::TooManyProps);
                    }
                    set = set.with(k);
                }
                labels[i] = set;
                stack.push((r, 2 * i + 2));
                stack.push((l, 2 * i + 1));
            }
        }
        Ok(PrefixTree { props, depth: d, labels })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write_node(0, &mut out);
        out
    }

    fn write_node(&self, i: usize, out: &mut String) {
        if i >= self.labels.len() {
            out.push('#');
            return;
        }
        out.push_str("((");
        out.push_str(&self.label_names(i).join(" "));
        out.push_str(") ");
        self.write_node(2 * i + 1, out);
        out.push(' ');
        self.write_node(2 * i + 2, out);
        out.push(')');
    }
}

impl fmt::Display for PrefixTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.serialize())
    }
}

/// Depth-`depth` unfolding of any tree.
pub fn prefix<T: LazyTree + ?Sized>(t: &mut T, depth: usize, caps: &Caps) -> Result<PrefixTree, TreeError> {
    if depth > caps.max_depth {
        return Err(TreeError::DepthCap { depth, cap: caps.max_depth });
    }
    let n = (1usize << (depth + 1)) - 1;
    let mut refs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let root = t.root();
    refs.push(root);
    for i in 0..n {
        let r = refs[i];
        labels.push(t.label(r));
        if 2 * i + 2 < n {
            refs.push(t.child(r, Dir::Left));
            refs.push(t.child(r, Dir::Right));
        }
    }
    Ok(PrefixTree { props: t.props().to_vec(), depth, labels })
}

/// `Exact(i)`: the trees agree on all levels below `i` and differ at level
/// `i`. `AtMost(c)`: no difference was found below level `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicDistance {
    Exact(usize),
    AtMost(usize),
}

impl DyadicDistance {
    /// Lower bound on the first level of disagreement.
    pub fn agreement_levels(self) -> usize {
        match self {
            DyadicDistance::Exact(i) | DyadicDistance::AtMost(i) => i,
        }
    }
}

impl fmt::Display for DyadicDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicDistance::Exact(i) => write!(f, "2^-{i}"),
            DyadicDistance::AtMost(i) => write!(f, "<= 2^-{i}"),
        }
    }
}

fn prop_translation(a: &[String], b: &[String]) -> Result<Vec<usize>, TreeError> {
    let mut sa: Vec<&String> = a.iter().collect();
    let mut sb: Vec<&String> = b.iter().collect();
    sa.sort();
    sb.sort();
    if sa != sb {
        return Err(TreeError::PropMismatch(a.to_vec(), b.to_vec()));
    }
    Ok(a.iter().map(|p| b.iter().position(|q| q == p).unwrap()).collect())
}

fn translate(l: LabelSet, map: &[usize]) -> LabelSet {
    let mut out = LabelSet::default();
    for (i, &j) in map.iter().enumerate() {
        if l.contains(i) {
            out = out.with(j);
        }
    }
    out
}

/// Breadth-first distance between two lazy trees, exploring levels below `cap`.
/// Pairs of nodes already compared are skipped, so regular trees terminate early.
pub fn distance<A, B>(a: &mut A, b: &mut B, cap: usize) -> Result<DyadicDistance, TreeError>
where
    A: LazyTree + ?Sized,
    B: LazyTree + ?Sized,
{
    let map = prop_translation(a.props(), b.props())?;
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    let start = (a.root(), b.root());
    seen.insert(start);
    queue.push_back((start, 0usize));
    while let Some(((x, y), level)) = queue.pop_front() {
        if level >= cap {
            break;
        }
        if translate(a.label(x), &map) != b.label(y) {
            return Ok(DyadicDistance::Exact(level));
        }
        for d in [Dir::Left, Dir::Right] {
            let pair = (a.child(x, d), b.child(y, d));
            if seen.insert(pair) {
                queue.push_back((pair, level + 1));
            }
        }
    }
    Ok(DyadicDistance::AtMost(cap))
}

/// Distance between two prefixes; beyond the shorter prefix nothing is known.
pub fn prefix_distance(a: &PrefixTree, b: &PrefixTree, cap: usize) -> Result<DyadicDistance, TreeError> {
    let n = a.labels.len().min(b.labels.len());
    for i in 0..n {
        let level = PrefixTree::level_of(i);
        if level >= cap {
            break;
        }
        let mut la = a.label_names(i);
        let mut lb = b.label_names(i);
        la.sort();
        lb.sort();
        if la != lb {
            // heap order is level order, so the first hit is on the lowest level
            return Ok(DyadicDistance::Exact(level));
        }
    }
    Ok(DyadicDistance::AtMost(cap.min(a.depth.min(b.depth) + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EX2: &str = "props P
root n0
node n0 { labels P ; left n1 ; right n1 }
node n1 { labels P ; left n2 ; right n2 }
node n2 { labels ; left n2 ; right n2 }
";

    #[test]
    fn load_and_serialize() {
        let t = RegularTree::parse(EX2).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.serialize(), EX2);
        assert_eq!(t.left, vec![1, 2, 2]);
    }

    #[test]
    fn load_errors() {
        let e = RegularTree::parse("props P\nroot a\nnode a { labels ; left a ; right b }").unwrap_err();
        assert!(matches!(e, TreeError::DanglingSuccessor { .. }));
        let e = RegularTree::parse("props P\nroot a\nnode a { labels Q ; left a ; right a }").unwrap_err();
        assert!(matches!(e, TreeError::UnknownProposition { .. }));
        let e = RegularTree::parse("props P\nroot a\nnode a { labels ; left a }").unwrap_err();
        assert!(matches!(e, TreeError::MissingSuccessor { .. }));
    }

    #[test]
    fn prefixes() {
        let mut t = RegularTree::parse(EX2).unwrap();
        let caps = Caps::default();
        assert_eq!(prefix(&mut t, 1, &caps).unwrap().serialize(), "((P) ((P) # #) ((P) # #))");
        assert_eq!(prefix(&mut t, 0, &caps).unwrap().serialize(), "((P) # #)");
        let p2 = prefix(&mut t, 2, &caps).unwrap();
        assert_eq!(p2.labels.iter().map(|l| l.len()).collect::<Vec<_>>(), vec![1, 1, 1, 0, 0, 0, 0]);
        assert_eq!(PrefixTree::parse(&p2.serialize()).unwrap(), p2);
        assert!(matches!(prefix(&mut t, 21, &caps), Err(TreeError::DepthCap { .. })));
    }

    #[test]
    fn distances() {
        let mut a = RegularTree::parse(EX2).unwrap();
        let mut b = a.clone();
        assert_eq!(distance(&mut a, &mut b, 10).unwrap(), DyadicDistance::AtMost(10));
        b.labels[0] = LabelSet::default();
        assert_eq!(distance(&mut a, &mut b, 10).unwrap(), DyadicDistance::Exact(0));
        let mut c = a.clone();
        c.labels[2] = LabelSet::single(0);
        assert_eq!(distance(&mut a, &mut c, 10).unwrap(), DyadicDistance::Exact(2));
        assert_eq!(distance(&mut a, &mut c, 2).unwrap(), DyadicDistance::AtMost(2));
        let caps = Caps::default();
        let pa = prefix(&mut a, 4, &caps).unwrap();
        let pc = prefix(&mut c, 4, &caps).unwrap();
        assert_eq!(prefix_distance(&pa, &pc, 10).unwrap(), DyadicDistance::Exact(2));
        assert_eq!(prefix_distance(&pa, &pa, 10).unwrap(), DyadicDistance::AtMost(5));
        let mut other = RegularTree::parse("props Q\nroot a\nnode a { labels ; left a ; right a }").unwrap();
        assert!(distance(&mut a, &mut other, 3).is_err());
    }

    #[test]
    fn level_arithmetic() {
        assert_eq!(PrefixTree::level_of(0), 0);
        assert_eq!(PrefixTree::level_of(2), 1);
        assert_eq!(PrefixTree::level_of(3), 2);
        assert_eq!(PrefixTree::level_of(6), 2);
        assert_eq!(PrefixTree::level_of(7), 3);
    }
}
