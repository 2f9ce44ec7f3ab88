//! CTL syntax: the formula tree, a parser and renderer for the text grammar,
//! the size and leftward-until-depth measures, and a hash-consed core DAG
//! that the evaluators work on.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! phi ::= phi "->" phi          (right associative)
//!       | phi "|" phi | phi "&" phi
//!       | "~" phi | "EX" phi | "AX" phi | "EF" phi | "EG" phi
//!       | "E[" phi "U" phi "]" | "E[" phi "W" phi "]"
//!       | "true" | "false" | atom | "(" phi ")"
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ctl {
    Atom(String),
    True,
    False,
    Not(Box<Ctl>),
    And(Box<Ctl>, Box<Ctl>),
    Or(Box<Ctl>, Box<Ctl>),
    Implies(Box<Ctl>, Box<Ctl>),
    /// Exists next.
    Ex(Box<Ctl>),
    /// For all next.
    Ax(Box<Ctl>),
    /// Exists finally.
    Ef(Box<Ctl>),
    /// Exists globally.
    Eg(Box<Ctl>),
    /// Exists until.
    Eu(Box<Ctl>, Box<Ctl>),
    /// Exists weak until.
    Ew(Box<Ctl>, Box<Ctl>),
}

impl Ctl {
    pub fn atom(name: &str) -> Ctl {
        Ctl::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Ctl {
        Ctl::Not(Box::new(self))
    }

    pub fn and(self, other: Ctl) -> Ctl {
        Ctl::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Ctl) -> Ctl {
        Ctl::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Ctl) -> Ctl {
        Ctl::Implies(Box::new(self), Box::new(other))
    }

    pub fn ex(self) -> Ctl {
        Ctl::Ex(Box::new(self))
    }

    pub fn ax(self) -> Ctl {
        Ctl::Ax(Box::new(self))
    }

    pub fn ef(self) -> Ctl {
        Ctl::Ef(Box::new(self))
    }

    pub fn eg(self) -> Ctl {
        Ctl::Eg(Box::new(self))
    }

    pub fn eu(self, goal: Ctl) -> Ctl {
        Ctl::Eu(Box::new(self), Box::new(goal))
    }

    pub fn ew(self, goal: Ctl) -> Ctl {
        Ctl::Ew(Box::new(self), Box::new(goal))
    }

    /// Left-nested conjunction; `true` for an empty iterator.
    pub fn all(items: impl IntoIterator<Item = Ctl>) -> Ctl {
        items.into_iter().reduce(Ctl::and).unwrap_or(Ctl::True)
    }

    /// Left-nested disjunction; `false` for an empty iterator.
    pub fn any(items: impl IntoIterator<Item = Ctl>) -> Ctl {
        items.into_iter().reduce(Ctl::or).unwrap_or(Ctl::False)
    }

    /// Rewrites sugar into the core connectives:
    /// `a | b = ~(~a & ~b)`, `a -> b = ~(a & ~b)`, `AX a = ~EX ~a`,
    /// `EF a = E[true U a]`, `EG a = E[a W false]`.
    pub fn desugar(&self) -> Ctl {
        match self {
            Ctl::Atom(_) | Ctl::True | Ctl::False => self.clone(),
            Ctl::Not(a) => a.desugar().not(),
            Ctl::And(a, b) => a.desugar().and(b.desugar()),
            Ctl::Or(a, b) => a.desugar().not().and(b.desugar().not()).not(),
            Ctl::Implies(a, b) => a.desugar().and(b.desugar().not()).not(),
            Ctl::Ex(a) => a.desugar().ex(),
            Ctl::Ax(a) => a.desugar().not().ex().not(),
            Ctl::Ef(a) => Ctl::True.eu(a.desugar()),
            Ctl::Eg(a) => a.desugar().ew(Ctl::False),
            Ctl::Eu(a, b) => a.desugar().eu(b.desugar()),
            Ctl::Ew(a, b) => a.desugar().ew(b.desugar()),
        }
    }

    pub fn is_core(&self) -> bool {
        match self {
            Ctl::Atom(_) | Ctl::True | Ctl::False => true,
            Ctl::Not(a) | Ctl::Ex(a) => a.is_core(),
            Ctl::And(a, b) | Ctl::Eu(a, b) | Ctl::Ew(a, b) => a.is_core() && b.is_core(),
            _ => false,
        }
    }

    /// `|phi|` of the desugared formula.
    pub fn size(&self) -> usize {
        match self {
            Ctl::Atom(_) | Ctl::True | Ctl::False => 1,
            Ctl::Not(a) | Ctl::Ex(a) => a.size() + 1,
            Ctl::And(a, b) | Ctl::Eu(a, b) | Ctl::Ew(a, b) => a.size() + b.size() + 1,
            // ~(~a & ~b)
            Ctl::Or(a, b) => a.size() + b.size() + 4,
            // ~(a & ~b)
            Ctl::Implies(a, b) => a.size() + b.size() + 3,
            // ~EX ~a
            Ctl::Ax(a) => a.size() + 3,
            // E[true U a], E[a W false]
            Ctl::Ef(a) | Ctl::Eg(a) => a.size() + 2,
        }
    }

    /// Leftward until depth of the desugared formula.
    pub fn lud(&self) -> u32 {
        match self {
            Ctl::Atom(_) | Ctl::True | Ctl::False => 0,
            Ctl::Not(a) | Ctl::Ex(a) | Ctl::Ax(a) => a.lud(),
            Ctl::And(a, b) | Ctl::Or(a, b) | Ctl::Implies(a, b) => a.lud().max(b.lud()),
            Ctl::Eu(a, b) | Ctl::Ew(a, b) => (a.lud() + 1).max(b.lud()),
            Ctl::Ef(a) => a.lud().max(1),
            Ctl::Eg(a) => a.lud() + 1,
        }
    }

    /// True iff the formula lies in the EF fragment: atoms, constants,
    /// negation, conjunction, `EX`, `EF` and sugar built from them.
    pub fn is_ef(&self) -> bool {
        match self {
            Ctl::Atom(_) | Ctl::True | Ctl::False => true,
            Ctl::Not(a) | Ctl::Ex(a) | Ctl::Ax(a) | Ctl::Ef(a) => a.is_ef(),
            Ctl::And(a, b) | Ctl::Or(a, b) | Ctl::Implies(a, b) => a.is_ef() && b.is_ef(),
            Ctl::Eu(a, b) => **a == Ctl::True && b.is_ef(),
            Ctl::Eg(_) | Ctl::Ew(..) => false,
        }
    }

    /// Propositions occurring in the formula, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<&str> {
        fn go<'a>(f: &'a Ctl, out: &mut Vec<&'a str>) {
            match f {
                Ctl::Atom(p) => out.push(p),
                Ctl::True | Ctl::False => {}
                Ctl::Not(a) | Ctl::Ex(a) | Ctl::Ax(a) | Ctl::Ef(a) | Ctl::Eg(a) => go(a, out),
                Ctl::And(a, b)
                | Ctl::Or(a, b)
                | Ctl::Implies(a, b)
                | Ctl::Eu(a, b)
                | Ctl::Ew(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Replaces every atom `p` for which `f(p)` is `Some` by the returned
    /// formula.
    pub fn substitute(&self, f: &impl Fn(&str) -> Option<Ctl>) -> Ctl {
        let b = |x: &Ctl| Box::new(x.substitute(f));
        match self {
            Ctl::Atom(p) => f(p).unwrap_or_else(|| self.clone()),
            Ctl::True | Ctl::False => self.clone(),
            Ctl::Not(a) => Ctl::Not(b(a)),
            Ctl::Ex(a) => Ctl::Ex(b(a)),
            Ctl::Ax(a) => Ctl::Ax(b(a)),
            Ctl::Ef(a) => Ctl::Ef(b(a)),
            Ctl::Eg(a) => Ctl::Eg(b(a)),
            Ctl::And(x, y) => Ctl::And(b(x), b(y)),
            Ctl::Or(x, y) => Ctl::Or(b(x), b(y)),
            Ctl::Implies(x, y) => Ctl::Implies(b(x), b(y)),
            Ctl::Eu(x, y) => Ctl::Eu(b(x), b(y)),
            Ctl::Ew(x, y) => Ctl::Ew(b(x), b(y)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Ctl::Implies(..) => 1,
            Ctl::Or(..) => 2,
            Ctl::And(..) => 3,
            Ctl::Not(_) | Ctl::Ex(_) | Ctl::Ax(_) | Ctl::Ef(_) | Ctl::Eg(_) => 4,
            _ => 5,
        }
    }
}

struct Prec<'a>(&'a Ctl, u8);

impl fmt::Display for Prec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Ctl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ctl::Atom(p) => write!(f, "{p}"),
            Ctl::True => write!(f, "true"),
            Ctl::False => write!(f, "false"),
            Ctl::Not(a) => write!(f, "~{}", Prec(a, 4)),
            Ctl::Ex(a) => write!(f, "EX {}", Prec(a, 4)),
            Ctl::Ax(a) => write!(f, "AX {}", Prec(a, 4)),
            Ctl::Ef(a) => write!(f, "EF {}", Prec(a, 4)),
            Ctl::Eg(a) => write!(f, "EG {}", Prec(a, 4)),
            Ctl::And(a, b) => write!(f, "{} & {}", Prec(a, 3), Prec(b, 4)),
            Ctl::Or(a, b) => write!(f, "{} | {}", Prec(a, 2), Prec(b, 3)),
            Ctl::Implies(a, b) => write!(f, "{} -> {}", Prec(a, 2), Prec(b, 1)),
            Ctl::Eu(a, b) => write!(f, "E[{} U {}]", a, b),
            Ctl::Ew(a, b) => write!(f, "E[{} W {}]", a, b),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Tilde,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' | b'!' => Tok::Tilde,
            b'&' => Tok::Amp,
            b'|' => Tok::Bar,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((i, Tok::Arrow));
                i += 2;
                continue;
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                })
            }
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

const RESERVED: &[&str] = &["true", "false", "EX", "AX", "EF", "EG", "E", "U", "W"];

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn implication(&mut self) -> Result<Ctl, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            Ok(lhs.implies(self.implication()?))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Ctl, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Ctl, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ctl, ParseError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::Ident(s)) => {
                let op: Option<fn(Ctl) -> Ctl> = match s.as_str() {
                    "EX" => Some(Ctl::ex),
                    "AX" => Some(Ctl::ax),
                    "EF" => Some(Ctl::ef),
                    "EG" => Some(Ctl::eg),
                    _ => None,
                };
                match op {
                    Some(op) => {
                        self.pos += 1;
                        Ok(op(self.unary()?))
                    }
                    None => self.primary(),
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Ctl, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(s)) if s == "E" => {
                self.pos += 1;
                self.expect(Tok::LBracket, "`[` after `E`")?;
                let lhs = self.implication()?;
                let weak = if self.is_ident("U") {
                    false
                } else if self.is_ident("W") {
                    true
                } else {
                    return self.error("expected `U` or `W`");
                };
                self.pos += 1;
                let rhs = self.implication()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(if weak { lhs.ew(rhs) } else { lhs.eu(rhs) })
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(Ctl::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.pos += 1;
                Ok(Ctl::False)
            }
            Some(Tok::Ident(s)) if RESERVED.contains(&s.as_str()) => {
                self.error(format!("reserved word `{s}` cannot be an atom"))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(Ctl::Atom(s))
            }
            Some(_) => self.error("expected a formula"),
            None => self.error("unexpected end of input"),
        }
    }
}

pub fn parse(text: &str) -> Result<Ctl, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let f = p.implication()?;
    if p.pos != p.toks.len() {
        return p.error("trailing input");
    }
    Ok(f)
}

impl std::str::FromStr for Ctl {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// A node of the core DAG. Children are indices of earlier nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Atom(String),
    True,
    False,
    Not(usize),
    And(usize, usize),
    Ex(usize),
    Eu(usize, usize),
    Ew(usize, usize),
}

/// The desugared formula with structurally equal subformulas shared.
/// Nodes are stored children-first, so index order is a valid bottom-up
/// evaluation order; the root is the last node.
#[derive(Debug, Clone)]
pub struct CoreDag {
    nodes: Vec<Node>,
    lud: Vec<u32>,
}

impl CoreDag {
    pub fn new(phi: &Ctl) -> CoreDag {
        fn intern(dag: &mut CoreDag, seen: &mut HashMap<Node, usize>, node: Node) -> usize {
            if let Some(&i) = seen.get(&node) {
                return i;
            }
            let lud = match &node {
                Node::Atom(_) | Node::True | Node::False => 0,
                Node::Not(a) | Node::Ex(a) => dag.lud[*a],
                Node::And(a, b) => dag.lud[*a].max(dag.lud[*b]),
                Node::Eu(a, b) | Node::Ew(a, b) => (dag.lud[*a] + 1).max(dag.lud[*b]),
            };
            dag.nodes.push(node.clone());
            dag.lud.push(lud);
            seen.insert(node, dag.nodes.len() - 1);
            dag.nodes.len() - 1
        }
        fn go(f: &Ctl, dag: &mut CoreDag, seen: &mut HashMap<Node, usize>) -> usize {
            let node = match f {
                Ctl::Atom(p) => Node::Atom(p.clone()),
                Ctl::True => Node::True,
                Ctl::False => Node::False,
                Ctl::Not(a) => Node::Not(go(a, dag, seen)),
                Ctl::And(a, b) => {
                    let a = go(a, dag, seen);
                    Node::And(a, go(b, dag, seen))
                }
                Ctl::Ex(a) => Node::Ex(go(a, dag, seen)),
                Ctl::Eu(a, b) => {
                    let a = go(a, dag, seen);
                    Node::Eu(a, go(b, dag, seen))
                }
                Ctl::Ew(a, b) => {
                    let a = go(a, dag, seen);
                    Node::Ew(a, go(b, dag, seen))
                }
                _ => unreachable!("formula is desugared"),
            };
            intern(dag, seen, node)
        }
        let mut dag = CoreDag {
            nodes: Vec::new(),
            lud: Vec::new(),
        };
        let mut seen = HashMap::new();
        go(&phi.desugar(), &mut dag, &mut seen);
        dag
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn lud(&self, i: usize) -> u32 {
        self.lud[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Ctl {
        parse(s).unwrap()
    }

    #[test]
    fn parses_examples() {
        assert_eq!(p("E[ p U q ]"), Ctl::atom("p").eu(Ctl::atom("q")));
        assert_eq!(p("EF p"), Ctl::atom("p").ef());
        assert_eq!(p("~EX g"), Ctl::atom("g").ex().not());
        assert_eq!(
            p("a -> b -> c"),
            Ctl::atom("a").implies(Ctl::atom("b").implies(Ctl::atom("c")))
        );
        assert_eq!(
            p("a | b & c"),
            Ctl::atom("a").or(Ctl::atom("b").and(Ctl::atom("c")))
        );
        assert_eq!(p("EX(p)"), Ctl::atom("p").ex());
    }

    #[test]
    fn parse_errors_carry_offsets() {
        assert_eq!(parse("p & ").unwrap_err().pos, 4);
        assert_eq!(parse("E[p X q]").unwrap_err().pos, 4);
        assert_eq!(parse("p q").unwrap_err().pos, 2);
        assert!(parse("U").is_err());
        assert_eq!(parse("p $").unwrap_err().pos, 2);
    }

    #[test]
    fn sizes() {
        assert_eq!(p("p").size(), 1);
        assert_eq!(p("~p").size(), 2);
        assert_eq!(p("E[p U q]").size(), 3);
        for s in ["p | q", "p -> q", "AX p", "EF p", "EG p", "EF (a | ~EX b)"] {
            assert_eq!(p(s).size(), p(s).desugar().size(), "{s}");
        }
    }

    #[test]
    fn lud_examples() {
        assert_eq!(p("E[E[p U q] U r]").lud(), 2);
        assert_eq!(p("E[p U E[q U r]]").lud(), 1);
        assert_eq!(p("EF (p & ~EX EF q)").lud(), 1);
        assert_eq!(p("EG EG p").lud(), 2);
        for s in ["EG p", "EF p", "EF E[E[a U b] U c]", "AX (p -> q)"] {
            assert_eq!(p(s).lud(), p(s).desugar().lud(), "{s}");
        }
    }

    #[test]
    fn ef_fragment() {
        assert!(p("EF (p & ~EX q)").is_ef());
        assert!(!p("E[p U q]").is_ef());
        assert!(p("alpha -> EX (beta & EF ~EX gamma)").is_ef());
        assert!(!p("EG p").is_ef());
    }

    #[test]
    fn dag_shares_subformulas() {
        let dag = CoreDag::new(&p("EX q & EX q"));
        assert_eq!(dag.nodes().len(), 3);
        assert_eq!(dag.nodes()[dag.root()], Node::And(1, 1));
        let dag = CoreDag::new(&p("E[E[p U q] U r]"));
        assert_eq!(dag.lud(dag.root()), 2);
    }
}
