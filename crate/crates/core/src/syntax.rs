//! Simple types, formulas of both dialects, the concrete syntax and the
//! typing judgments.
//!
//! Both dialects share one AST. Automaton bodies are formulas without
//! binders; HFL formulas may additionally use `\x:τ.φ`, `mu X:τ.φ` and
//! `nu X:τ.φ`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// `Pr` or an arrow type. Arrows associate to the right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleType {
    Ground,
    Arrow(Arc<SimpleType>, Arc<SimpleType>),
}

impl SimpleType {
    pub fn arrow(operand: SimpleType, result: SimpleType) -> SimpleType {
        SimpleType::Arrow(Arc::new(operand), Arc::new(result))
    }

    /// Builds `τ1 -> ... -> τn -> Pr`.
    pub fn from_args<I>(args: I) -> SimpleType
    where
        I: IntoIterator<Item = SimpleType>,
        I::IntoIter: DoubleEndedIterator,
    {
        args.into_iter()
            .rev()
            .fold(SimpleType::Ground, |acc, a| SimpleType::arrow(a, acc))
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, SimpleType::Ground)
    }

    /// The operand types `τ1, ..., τn` of `τ1 -> ... -> τn -> Pr`.
    pub fn args(&self) -> Vec<SimpleType> {
        let mut out = Vec::new();
        let mut t = self;
        while let SimpleType::Arrow(a, r) = t {
            out.push((**a).clone());
            t = r;
        }
        out
    }

    pub fn arity(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let SimpleType::Arrow(_, r) = t {
            n += 1;
            t = r;
        }
        n
    }

    pub fn order(&self) -> usize {
        match self {
            SimpleType::Ground => 0,
            SimpleType::Arrow(..) => self.args().iter().map(|a| a.order()).max().unwrap_or(0) + 1,
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Ground => write!(f, "Pr"),
            SimpleType::Arrow(a, r) => {
                if a.is_ground() {
                    write!(f, "Pr -> {r}")
                } else {
                    write!(f, "({a}) -> {r}")
                }
            }
        }
    }
}

pub fn order(t: &SimpleType) -> usize {
    t.order()
}

/// Formula AST shared by HFL and automaton bodies.
///
/// `Var` covers lambda variables, fixpoint variables and automaton states;
/// which one is meant is determined by the binder or declaration in scope.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Prop(String),
    NegProp(String),
    Diamond(Box<Formula>),
    Box(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Var(String),
    App(Box<Formula>, Box<Formula>),
    Lambda(String, SimpleType, Box<Formula>),
    Mu(String, SimpleType, Box<Formula>),
    Nu(String, SimpleType, Box<Formula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixKind {
    Mu,
    Nu,
}

impl FixKind {
    pub fn dual(self) -> FixKind {
        match self {
            FixKind::Mu => FixKind::Nu,
            FixKind::Nu => FixKind::Mu,
        }
    }
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }
    pub fn prop(name: impl Into<String>) -> Formula {
        Formula::Prop(name.into())
    }
    pub fn neg_prop(name: impl Into<String>) -> Formula {
        Formula::NegProp(name.into())
    }
    pub fn diamond(f: Formula) -> Formula {
        Formula::Diamond(Box::new(f))
    }
    pub fn boxed(f: Formula) -> Formula {
        Formula::Box(Box::new(f))
    }
    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }
    pub fn app(f: Formula, a: Formula) -> Formula {
        Formula::App(Box::new(f), Box::new(a))
    }
    pub fn lambda(x: impl Into<String>, t: SimpleType, body: Formula) -> Formula {
        Formula::Lambda(x.into(), t, Box::new(body))
    }
    pub fn mu(x: impl Into<String>, t: SimpleType, body: Formula) -> Formula {
        Formula::Mu(x.into(), t, Box::new(body))
    }
    pub fn nu(x: impl Into<String>, t: SimpleType, body: Formula) -> Formula {
        Formula::Nu(x.into(), t, Box::new(body))
    }
    pub fn fix(kind: FixKind, x: impl Into<String>, t: SimpleType, body: Formula) -> Formula {
        match kind {
            FixKind::Mu => Formula::mu(x, t, body),
            FixKind::Nu => Formula::nu(x, t, body),
        }
    }

    /// `(¬l ∨ φ)`, the encoding of an implication with an atomic premise.
    pub fn implies_prop(l: impl Into<String>, then: Formula) -> Formula {
        Formula::or(Formula::NegProp(l.into()), then)
    }

    pub fn as_fix(&self) -> Option<(FixKind, &str, &SimpleType, &Formula)> {
        match self {
            Formula::Mu(x, t, b) => Some((FixKind::Mu, x, t, b)),
            Formula::Nu(x, t, b) => Some((FixKind::Nu, x, t, b)),
            _ => None,
        }
    }

    pub fn has_binders(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| {
            if matches!(f, Formula::Lambda(..) | Formula::Mu(..) | Formula::Nu(..)) {
                found = true;
            }
        });
        found
    }

    /// Preorder traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::True
            | Formula::False
            | Formula::Prop(_)
            | Formula::NegProp(_)
            | Formula::Var(_) => {}
            Formula::Diamond(c) | Formula::Box(c) => c.visit(f),
            Formula::Or(l, r) | Formula::And(l, r) | Formula::App(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Formula::Lambda(_, _, b) | Formula::Mu(_, _, b) | Formula::Nu(_, _, b) => b.visit(f),
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Names occurring free, whether as `Var` or `Prop` nodes. Propositions
    /// are included because the parser cannot always tell them apart from
    /// free upper-case variables.
    pub fn free_names(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Prop(n) | Formula::NegProp(n) | Formula::Var(n) => {
                    if !bound.iter().any(|b| b == n) {
                        out.insert(n.clone());
                    }
                }
                Formula::Diamond(c) | Formula::Box(c) => go(c, bound, out),
                Formula::Or(l, r) | Formula::And(l, r) | Formula::App(l, r) => {
                    go(l, bound, out);
                    go(r, bound, out);
                }
                Formula::Lambda(x, _, b) | Formula::Mu(x, _, b) | Formula::Nu(x, _, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn occurs_free(&self, name: &str) -> bool {
        self.free_names().contains(name)
    }

    /// Replaces free occurrences of `name` (as `Var` or `Prop`) by `with`.
    /// No capture avoidance: callers keep binder names distinct.
    pub fn substitute(&self, name: &str, with: &Formula) -> Formula {
        match self {
            Formula::Var(n) | Formula::Prop(n) if n == name => with.clone(),
            Formula::True
            | Formula::False
            | Formula::Prop(_)
            | Formula::NegProp(_)
            | Formula::Var(_) => self.clone(),
            Formula::Diamond(c) => Formula::diamond(c.substitute(name, with)),
            Formula::Box(c) => Formula::boxed(c.substitute(name, with)),
            Formula::Or(l, r) => Formula::or(l.substitute(name, with), r.substitute(name, with)),
            Formula::And(l, r) => Formula::and(l.substitute(name, with), r.substitute(name, with)),
            Formula::App(l, r) => Formula::app(l.substitute(name, with), r.substitute(name, with)),
            Formula::Lambda(x, t, b) => {
                if x == name {
                    self.clone()
                } else {
                    Formula::lambda(x.clone(), t.clone(), b.substitute(name, with))
                }
            }
            Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
                if x == name {
                    self.clone()
                } else {
                    let kind = self.as_fix().map(|(k, ..)| k).unwrap_or(FixKind::Mu);
                    Formula::fix(kind, x.clone(), t.clone(), b.substitute(name, with))
                }
            }
        }
    }

    /// Dualizes every connective and literal: ◇↔□, ∨↔∧, P↔¬P, tt↔ff, μ↔ν.
    pub fn dual(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Prop(p) => Formula::NegProp(p.clone()),
            Formula::NegProp(p) => Formula::Prop(p.clone()),
            Formula::Var(_) => self.clone(),
            Formula::Diamond(c) => Formula::boxed(c.dual()),
            Formula::Box(c) => Formula::diamond(c.dual()),
            Formula::Or(l, r) => Formula::and(l.dual(), r.dual()),
            Formula::And(l, r) => Formula::or(l.dual(), r.dual()),
            Formula::App(l, r) => Formula::app(l.dual(), r.dual()),
            Formula::Lambda(x, t, b) => Formula::lambda(x.clone(), t.clone(), b.dual()),
            Formula::Mu(x, t, b) => Formula::nu(x.clone(), t.clone(), b.dual()),
            Formula::Nu(x, t, b) => Formula::mu(x.clone(), t.clone(), b.dual()),
        }
    }

    /// Max order over the annotated binder types.
    pub fn binder_order(&self) -> usize {
        let mut m = 0;
        self.visit(&mut |f| match f {
            Formula::Lambda(_, t, _) => m = m.max(t.order() + 1),
            Formula::Mu(_, t, _) | Formula::Nu(_, t, _) => m = m.max(t.order()),
            _ => {}
        });
        m
    }
}

fn is_lambda_name(name: &str) -> bool {
    name.chars()
        .next()
        .map(|c| c.is_ascii_lowercase() || c == '_')
        .unwrap_or(false)
}

// ---------------------------------------------------------------------------
// Printing

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    OrLeft,
    OrRight,
    AndLeft,
    AndRight,
    Operand,
}

fn write_formula(f: &Formula, out: &mut fmt::Formatter<'_>, ctx: Ctx) -> fmt::Result {
    match f {
        Formula::True => write!(out, "tt"),
        Formula::False => write!(out, "ff"),
        Formula::Prop(p) | Formula::Var(p) => write!(out, "{p}"),
        Formula::NegProp(p) => write!(out, "!{p}"),
        Formula::App(l, r) => {
            write!(out, "(")?;
            write_formula(l, out, Ctx::Operand)?;
            write!(out, " ")?;
            write_formula(r, out, Ctx::Operand)?;
            write!(out, ")")
        }
        Formula::Or(l, r) => {
            let paren = matches!(ctx, Ctx::OrRight | Ctx::AndLeft | Ctx::AndRight | Ctx::Operand);
            if paren {
                write!(out, "(")?;
            }
            write_formula(l, out, Ctx::OrLeft)?;
            write!(out, " \\/ ")?;
            write_formula(r, out, Ctx::OrRight)?;
            if paren {
                write!(out, ")")?;
            }
            Ok(())
        }
        Formula::And(l, r) => {
            let paren = matches!(ctx, Ctx::AndRight | Ctx::Operand);
            if paren {
                write!(out, "(")?;
            }
            write_formula(l, out, Ctx::AndLeft)?;
            write!(out, " /\\ ")?;
            write_formula(r, out, Ctx::AndRight)?;
            if paren {
                write!(out, ")")?;
            }
            Ok(())
        }
        Formula::Diamond(_)
        | Formula::Box(_)
        | Formula::Lambda(..)
        | Formula::Mu(..)
        | Formula::Nu(..) => {
            let paren = ctx != Ctx::Top;
            if paren {
                write!(out, "(")?;
            }
            match f {
                Formula::Diamond(c) => {
                    write!(out, "<> ")?;
                    write_formula(c, out, Ctx::Top)?;
                }
                Formula::Box(c) => {
                    write!(out, "[] ")?;
                    write_formula(c, out, Ctx::Top)?;
                }
                Formula::Lambda(x, t, b) => {
                    write!(out, "\\{x} : {t} . ")?;
                    write_formula(b, out, Ctx::Top)?;
                }
                Formula::Mu(x, t, b) => {
                    write!(out, "mu {x} : {t} . ")?;
                    write_formula(b, out, Ctx::Top)?;
                }
                Formula::Nu(x, t, b) => {
                    write!(out, "nu {x} : {t} . ")?;
                    write_formula(b, out, Ctx::Top)?;
                }
                _ => unreachable!(),
            }
            if paren {
                write!(out, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f, Ctx::Top)
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Or,
    And,
    Backslash,
    Diamond,
    Box,
    Bang,
    Colon,
    Semi,
    Comma,
    Dot,
    Arrow,
    Hash,
    Ident(String),
    Number(u64),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Or => write!(f, "`\\/`"),
            Tok::And => write!(f, "`/\\`"),
            Tok::Backslash => write!(f, "`\\`"),
            Tok::Diamond => write!(f, "`<>`"),
            Tok::Box => write!(f, "`[]`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Hash => write!(f, "`#`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError { pos, message: message.into() }
    }
}

pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        let mut adv = 1;
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '/' if next == Some('\\') => {
                out.push((Tok::And, pos));
                adv = 2;
            }
            '\\' if next == Some('/') => {
                out.push((Tok::Or, pos));
                adv = 2;
            }
            '\\' => out.push((Tok::Backslash, pos)),
            '<' if next == Some('>') => {
                out.push((Tok::Diamond, pos));
                adv = 2;
            }
            '[' if next == Some(']') => {
                out.push((Tok::Box, pos));
                adv = 2;
            }
            '-' if next == Some('>') => {
                out.push((Tok::Arrow, pos));
                adv = 2;
            }
            '(' => out.push((Tok::LParen, pos)),
            ')' => out.push((Tok::RParen, pos)),
            '{' => out.push((Tok::LBrace, pos)),
            '}' => out.push((Tok::RBrace, pos)),
            '!' => out.push((Tok::Bang, pos)),
            ':' => out.push((Tok::Colon, pos)),
            ';' => out.push((Tok::Semi, pos)),
            ',' => out.push((Tok::Comma, pos)),
            '.' => out.push((Tok::Dot, pos)),
            '#' => out.push((Tok::Hash, pos)),
            c if c.is_ascii_digit() => {
                let start = i;
                while i + adv < chars.len() && chars[i + adv].is_ascii_digit() {
                    adv += 1;
                }
                let s: String = chars[start..start + adv].iter().collect();
                let n = s
                    .parse::<u64>()
                    .map_err(|_| SyntaxError::new(pos, format!("number `{s}` out of range")))?;
                out.push((Tok::Number(n), pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + adv < chars.len()
                    && (chars[i + adv].is_ascii_alphanumeric()
                        || chars[i + adv] == '_'
                        || chars[i + adv] == '\'')
                {
                    adv += 1;
                }
                let s: String = chars[i..i + adv].iter().collect();
                out.push((Tok::Ident(s), pos));
            }
            other => return Err(SyntaxError::new(pos, format!("unexpected character `{other}`"))),
        }
        i += adv;
        col += adv;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Hfl,
    ApkaBody,
    Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Formula(Formula),
    Type(SimpleType),
}

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    bound: Vec<String>,
}

const KEYWORDS: &[&str] = &["mu", "nu", "tt", "ff", "Pr"];

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, Pos)>) -> Self {
        Parser { toks, at: 0, bound: Vec::new() }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::new(self.pos(), msg))
    }

    pub(crate) fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {t}, found {}", self.peek()))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn parse_type(&mut self) -> Result<SimpleType, SyntaxError> {
        let lhs = match self.peek() {
            Tok::LParen => {
                self.bump();
                let t = self.parse_type()?;
                self.expect(Tok::RParen)?;
                t
            }
            Tok::Ident(s) if s == "Pr" => {
                self.bump();
                SimpleType::Ground
            }
            other => return self.err(format!("expected a type, found {other}")),
        };
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.parse_type()?;
            Ok(SimpleType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    pub(crate) fn parse_formula(&mut self, dialect: Dialect) -> Result<Formula, SyntaxError> {
        let mut lhs = self.parse_and(dialect)?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.parse_and(dialect)?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self, dialect: Dialect) -> Result<Formula, SyntaxError> {
        let mut lhs = self.parse_unary(dialect)?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.parse_unary(dialect)?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binder(&mut self, dialect: Dialect) -> Result<(String, SimpleType, Formula), SyntaxError> {
        if dialect != Dialect::Hfl {
            return self.err("binders are not allowed in automaton bodies");
        }
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let t = self.parse_type()?;
        self.expect(Tok::Dot)?;
        self.bound.push(name.clone());
        let body = self.parse_formula(dialect);
        self.bound.pop();
        Ok((name, t, body?))
    }

    fn parse_unary(&mut self, dialect: Dialect) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Diamond => {
                self.bump();
                Ok(Formula::diamond(self.parse_formula(dialect)?))
            }
            Tok::Box => {
                self.bump();
                Ok(Formula::boxed(self.parse_formula(dialect)?))
            }
            Tok::Backslash => {
                self.bump();
                let (x, t, b) = self.binder(dialect)?;
                Ok(Formula::lambda(x, t, b))
            }
            Tok::Ident(s) if s == "mu" || s == "nu" => {
                self.bump();
                let (x, t, b) = self.binder(dialect)?;
                Ok(if s == "mu" { Formula::mu(x, t, b) } else { Formula::nu(x, t, b) })
            }
            Tok::Ident(s) if s == "tt" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "ff" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Bang => {
                self.bump();
                let p = self.ident()?;
                Ok(Formula::NegProp(p))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.bound.contains(&name) || is_lambda_name(&name) {
                    Ok(Formula::Var(name))
                } else {
                    Ok(Formula::Prop(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let first = self.parse_formula(dialect)?;
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(first);
                }
                let second = self.parse_formula(dialect)?;
                self.expect(Tok::RParen)?;
                Ok(Formula::app(first, second))
            }
            other => self.err(format!("expected a formula, found {other}")),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
}

pub fn parse(text: &str, dialect: Dialect) -> Result<Parsed, SyntaxError> {
    let mut p = Parser::new(lex(text)?);
    let out = match dialect {
        Dialect::Type => Parsed::Type(p.parse_type()?),
        d => Parsed::Formula(p.parse_formula(d)?),
    };
    if !p.at_eof() {
        return p.err(format!("unexpected trailing {}", p.peek()));
    }
    Ok(out)
}

pub fn parse_formula(text: &str, dialect: Dialect) -> Result<Formula, SyntaxError> {
    match parse(text, dialect)? {
        Parsed::Formula(f) => Ok(f),
        Parsed::Type(_) => Err(SyntaxError::new(Pos { line: 1, col: 1 }, "expected a formula dialect")),
    }
}

pub fn parse_hfl(text: &str) -> Result<Formula, SyntaxError> {
    parse_formula(text, Dialect::Hfl)
}

pub fn parse_type(text: &str) -> Result<SimpleType, SyntaxError> {
    match parse(text, Dialect::Type)? {
        Parsed::Type(t) => Ok(t),
        Parsed::Formula(_) => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Typing

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingContext {
    pub lambda_vars: BTreeMap<String, SimpleType>,
    pub fixpoint_vars: BTreeMap<String, SimpleType>,
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_lambda(mut self, name: impl Into<String>, t: SimpleType) -> Self {
        self.lambda_vars.insert(name.into(), t);
        self
    }

    pub fn with_fixpoint(mut self, name: impl Into<String>, t: SimpleType) -> Self {
        self.fixpoint_vars.insert(name.into(), t);
        self
    }

    pub fn lookup(&self, name: &str) -> Option<&SimpleType> {
        self.lambda_vars.get(name).or_else(|| self.fixpoint_vars.get(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type mismatch in `{formula}`: {detail}")]
    TypeMismatch { formula: String, detail: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("`{0}` is not allowed in automaton bodies")]
    DialectViolation(String),
}

fn mismatch(f: &Formula, detail: impl Into<String>) -> TypeError {
    TypeError::TypeMismatch { formula: f.to_string(), detail: detail.into() }
}

/// Derives the type of `f` under `ctx` using the rules for automaton bodies
/// and, in the HFL dialect, the binder rules.
pub fn typecheck(ctx: &TypingContext, f: &Formula, dialect: Dialect) -> Result<SimpleType, TypeError> {
    let expect_ground = |g: &Formula, ctx: &TypingContext| -> Result<(), TypeError> {
        let t = typecheck(ctx, g, dialect)?;
        if t.is_ground() {
            Ok(())
        } else {
            Err(mismatch(g, format!("expected Pr, found {t}")))
        }
    };
    match f {
        Formula::True | Formula::False | Formula::NegProp(_) => Ok(SimpleType::Ground),
        Formula::Prop(p) => Ok(ctx.lookup(p).cloned().unwrap_or(SimpleType::Ground)),
        Formula::Var(x) => ctx.lookup(x).cloned().ok_or_else(|| TypeError::UnboundVariable(x.clone())),
        Formula::Diamond(c) | Formula::Box(c) => {
            expect_ground(c, ctx)?;
            Ok(SimpleType::Ground)
        }
        Formula::Or(l, r) | Formula::And(l, r) => {
            expect_ground(l, ctx)?;
            expect_ground(r, ctx)?;
            Ok(SimpleType::Ground)
        }
        Formula::App(op, arg) => {
            let top = typecheck(ctx, op, dialect)?;
            let targ = typecheck(ctx, arg, dialect)?;
            match top {
                SimpleType::Arrow(a, r) if *a == targ => Ok((*r).clone()),
                SimpleType::Arrow(a, _) => {
                    Err(mismatch(f, format!("operand has type {targ}, operator expects {a}")))
                }
                SimpleType::Ground => Err(mismatch(f, "operator has type Pr, which is not a function type")),
            }
        }
        Formula::Lambda(x, t, b) => {
            if dialect != Dialect::Hfl {
                return Err(TypeError::DialectViolation(format!("\\{x}")));
            }
            let inner = ctx.clone().with_lambda(x.clone(), t.clone());
            let tb = typecheck(&inner, b, dialect)?;
            Ok(SimpleType::arrow(t.clone(), tb))
        }
        Formula::Mu(x, t, b) | Formula::Nu(x, t, b) => {
            if dialect != Dialect::Hfl {
                return Err(TypeError::DialectViolation(x.clone()));
            }
            let mut inner = ctx.clone();
            inner.lambda_vars.remove(x);
            inner.fixpoint_vars.insert(x.clone(), t.clone());
            let tb = typecheck(&inner, b, dialect)?;
            if &tb == t {
                Ok(t.clone())
            } else {
                Err(mismatch(f, format!("fixpoint annotated {t} but body has type {tb}")))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Binding analysis

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingReport {
    pub well_named: bool,
    pub free_lambda_vars: BTreeSet<String>,
    pub free_fixpoint_vars: BTreeSet<String>,
    /// Defining subformula `σX.ψ` for each fixpoint variable (first binder
    /// wins when the formula is not well-named).
    pub fixpoint_defs: BTreeMap<String, Formula>,
    /// Pairs `(X, Y)` with `X <_fp Y`: `Y` occurs free in the definition of `X`.
    pub outermore: BTreeSet<(String, String)>,
}

impl BindingReport {
    pub fn is_closed(&self) -> bool {
        self.free_lambda_vars.is_empty() && self.free_fixpoint_vars.is_empty()
    }

    /// `true` if `y` is outermore than `x`.
    pub fn is_outermore(&self, y: &str, x: &str) -> bool {
        self.outermore.contains(&(x.to_string(), y.to_string()))
    }

    /// Elements of `among` maximal w.r.t. `<_fp` within `among`.
    pub fn outermost<'a>(&self, among: &'a [String]) -> Vec<&'a String> {
        among
            .iter()
            .filter(|x| !among.iter().any(|y| y != *x && self.is_outermore(y, x)))
            .collect()
    }
}

pub fn analyze_binding(f: &Formula) -> BindingReport {
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Lambda,
        Fix,
    }
    struct St {
        seen_lambda: BTreeSet<String>,
        seen_fix: BTreeSet<String>,
        well_named: bool,
        free_l: BTreeSet<String>,
        free_f: BTreeSet<String>,
        defs: BTreeMap<String, Formula>,
    }
    fn go(f: &Formula, scope: &mut Vec<(String, Kind)>, st: &mut St) {
        match f {
            Formula::True | Formula::False | Formula::Prop(_) | Formula::NegProp(_) => {}
            Formula::Var(x) => {
                if !scope.iter().any(|(n, _)| n == x) {
                    if is_lambda_name(x) {
                        st.free_l.insert(x.clone());
                    } else {
                        st.free_f.insert(x.clone());
                    }
                }
            }
            Formula::Diamond(c) | Formula::Box(c) => go(c, scope, st),
            Formula::Or(l, r) | Formula::And(l, r) | Formula::App(l, r) => {
                go(l, scope, st);
                go(r, scope, st);
            }
            Formula::Lambda(x, _, b) => {
                if !st.seen_lambda.insert(x.clone()) {
                    st.well_named = false;
                }
                scope.push((x.clone(), Kind::Lambda));
                go(b, scope, st);
                scope.pop();
            }
            Formula::Mu(x, _, b) | Formula::Nu(x, _, b) => {
                if !st.seen_fix.insert(x.clone()) {
                    st.well_named = false;
                }
                st.defs.entry(x.clone()).or_insert_with(|| f.clone());
                scope.push((x.clone(), Kind::Fix));
                go(b, scope, st);
                scope.pop();
            }
        }
    }
    let mut st = St {
        seen_lambda: BTreeSet::new(),
        seen_fix: BTreeSet::new(),
        well_named: true,
        free_l: BTreeSet::new(),
        free_f: BTreeSet::new(),
        defs: BTreeMap::new(),
    };
    go(f, &mut Vec::new(), &mut st);
    let mut outermore = BTreeSet::new();
    for (x, def) in &st.defs {
        let free = def.free_names();
        for y in st.defs.keys() {
            if y != x && free.contains(y) {
                outermore.insert((x.clone(), y.clone()));
            }
        }
    }
    BindingReport {
        well_named: st.well_named,
        free_lambda_vars: st.free_l,
        free_fixpoint_vars: st.free_f,
        fixpoint_defs: st.defs,
        outermore,
    }
}
