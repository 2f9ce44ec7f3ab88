//! Boolean formulas with n-ary connectives, generic over the variable type.
//!
//! [`CrrFormula`] ranges over the one-hot residue variables `x_{i,r}` and
//! [`BoolFormula`] over plain variables `x_1, ..., x_m`.

use std::fmt;

use crate::arith::CrrAssignment;

use super::GadgetError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<V> {
    Var(V),
    Not(Box<Formula<V>>),
    /// Conjunction; the empty conjunction is `true`.
    And(Vec<Formula<V>>),
    /// Disjunction; the empty disjunction is `false`.
    Or(Vec<Formula<V>>),
}

/// The residue variable `x_{i,r}` ("the value is `r` modulo the `i`-th
/// prime"), with `i` starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrrVar {
    pub i: usize,
    pub r: u64,
}

pub type CrrFormula = Formula<CrrVar>;

/// Formula over `x_1, ..., x_m`; variables are stored 1-based.
pub type BoolFormula = Formula<usize>;

impl<V> Formula<V> {
    pub fn var(v: V) -> Self {
        Formula::Var(v)
    }

    pub fn constant(b: bool) -> Self {
        if b {
            Formula::And(Vec::new())
        } else {
            Formula::Or(Vec::new())
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        Formula::And(vec![self, other])
    }

    pub fn or(self, other: Self) -> Self {
        Formula::Or(vec![self, other])
    }

    pub fn eval(&self, value: &impl Fn(&V) -> bool) -> bool {
        match self {
            Formula::Var(v) => value(v),
            Formula::Not(a) => !a.eval(value),
            Formula::And(xs) => xs.iter().all(|x| x.eval(value)),
            Formula::Or(xs) => xs.iter().any(|x| x.eval(value)),
        }
    }

    /// Leaves count 1, a negation adds 1, an n-ary node adds `n - 1` (the
    /// size of the equivalent binary tree); constants count 1.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) => 1,
            Formula::Not(a) => a.size() + 1,
            Formula::And(xs) | Formula::Or(xs) if xs.is_empty() => 1,
            Formula::And(xs) | Formula::Or(xs) => {
                xs.iter().map(Formula::size).sum::<usize>() + xs.len() - 1
            }
        }
    }

    pub fn is_negation_free(&self) -> bool {
        match self {
            Formula::Var(_) => true,
            Formula::Not(_) => false,
            Formula::And(xs) | Formula::Or(xs) => xs.iter().all(Formula::is_negation_free),
        }
    }

    pub fn map_vars<W>(&self, f: &impl Fn(&V) -> W) -> Formula<W> {
        match self {
            Formula::Var(v) => Formula::Var(f(v)),
            Formula::Not(a) => Formula::Not(Box::new(a.map_vars(f))),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.map_vars(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.map_vars(f)).collect()),
        }
    }

    pub fn for_each_var(&self, f: &mut impl FnMut(&V)) {
        match self {
            Formula::Var(v) => f(v),
            Formula::Not(a) => a.for_each_var(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.for_each_var(f)),
        }
    }
}

impl<V: Clone> Formula<V> {
    /// Negation normal form: negations only directly above variables.
    pub fn push_negations(&self) -> Self {
        self.nnf(false)
    }

    fn nnf(&self, negate: bool) -> Self {
        match (self, negate) {
            (Formula::Var(_), false) => self.clone(),
            (Formula::Var(_), true) => self.clone().not(),
            (Formula::Not(a), _) => a.nnf(!negate),
            (Formula::And(xs), false) => Formula::And(xs.iter().map(|x| x.nnf(false)).collect()),
            (Formula::Or(xs), false) => Formula::Or(xs.iter().map(|x| x.nnf(false)).collect()),
            (Formula::And(xs), true) => Formula::Or(xs.iter().map(|x| x.nnf(true)).collect()),
            (Formula::Or(xs), true) => Formula::And(xs.iter().map(|x| x.nnf(true)).collect()),
        }
    }
}

impl CrrFormula {
    pub fn x(i: usize, r: u64) -> Self {
        Formula::Var(CrrVar { i, r })
    }

    pub fn eval_crr(&self, a: &CrrAssignment) -> bool {
        self.eval(&|v: &CrrVar| a.x(v.i, v.r))
    }

    /// Checks that every variable refers to an existing prime and residue.
    pub fn validate(&self, primes: &[u64]) -> Result<(), GadgetError> {
        let mut bad = None;
        self.for_each_var(&mut |v| {
            if bad.is_none() && (v.i == 0 || v.i > primes.len() || v.r >= primes[v.i - 1]) {
                bad = Some(*v);
            }
        });
        match bad {
            Some(v) => Err(GadgetError::VariableOutOfRange { i: v.i, r: v.r }),
            None => Ok(()),
        }
    }
}

/// Pushes negations to the leaves and replaces each `~x_{i,r}` by the
/// disjunction of the other residues of the `i`-th prime. The result is
/// negation-free and agrees with the input on every CRR assignment.
pub fn eliminate_negations(f: &CrrFormula, primes: &[u64]) -> Result<CrrFormula, GadgetError> {
    f.validate(primes)?;
    fn go(f: &CrrFormula, primes: &[u64]) -> CrrFormula {
        match f {
            Formula::Var(_) => f.clone(),
            Formula::Not(a) => match &**a {
                Formula::Var(v) => Formula::Or(
                    (0..primes[v.i - 1])
                        .filter(|&k| k != v.r)
                        .map(|k| CrrFormula::x(v.i, k))
                        .collect(),
                ),
                _ => unreachable!("negations were pushed to the leaves"),
            },
            Formula::And(xs) => Formula::And(xs.iter().map(|x| go(x, primes)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| go(x, primes)).collect()),
        }
    }
    Ok(go(&f.push_negations(), primes))
}

impl fmt::Display for CrrVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}_{}", self.i, self.r)
    }
}

/// Variable type that can be written as an identifier.
pub trait VarName {
    fn write_name(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result;
}

impl VarName for CrrVar {
    fn write_name(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl VarName for usize {
    fn write_name(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{self}")
    }
}

impl<V: VarName> Formula<V> {
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let (prec, sep, empty) = match self {
            Formula::Var(v) => return v.write_name(f),
            Formula::Not(a) => {
                f.write_str("~")?;
                return a.write_prec(f, 3);
            }
            Formula::And(_) => (2, " & ", "true"),
            Formula::Or(_) => (1, " | ", "false"),
        };
        let xs = match self {
            Formula::And(xs) | Formula::Or(xs) => xs,
            _ => unreachable!(),
        };
        if xs.is_empty() {
            return f.write_str(empty);
        }
        // Singletons are parenthesised so that they re-parse as the same node.
        let paren = prec < min || xs.len() == 1;
        if paren {
            f.write_str("(")?;
        }
        for (k, x) in xs.iter().enumerate() {
            if k > 0 {
                f.write_str(sep)?;
            }
            x.write_prec(f, prec + 1)?;
        }
        if xs.len() == 1 {
            f.write_str(sep.trim_end())?;
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl<V: VarName> fmt::Display for Formula<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// Parses `|`, `&`, `~`, parentheses, `true`, `false` and identifiers, with
/// `~` binding tightest and `|` loosest. Chains of the same connective become
/// one n-ary node; a trailing connective inside parentheses, as in `(a &)`,
/// denotes a one-element node. Identifiers are resolved by `var`.
pub fn parse_formula<V>(
    text: &str,
    var: &mut impl FnMut(&str) -> Result<V, String>,
) -> Result<Formula<V>, GadgetError> {
    let mut p = FormulaParser { text, pos: 0 };
    let f = p.nary(var, '|')?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.error("trailing input");
    }
    Ok(f)
}

struct FormulaParser<'a> {
    text: &'a str,
    pos: usize,
}

impl FormulaParser<'_> {
    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, GadgetError> {
        Err(GadgetError::Syntax {
            line: 0,
            msg: format!("offset {}: {}", self.pos, msg.into()),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn peek_closer(&mut self) -> bool {
        self.skip_ws();
        self.text[self.pos..].starts_with(')') || self.pos == self.text.len()
    }

    fn nary<V>(
        &mut self,
        var: &mut dyn FnMut(&str) -> Result<V, String>,
        op: char,
    ) -> Result<Formula<V>, GadgetError> {
        let next = |p: &mut Self, var: &mut dyn FnMut(&str) -> Result<V, String>| {
            if op == '|' {
                p.nary(var, '&')
            } else {
                p.unary(var)
            }
        };
        let mut items = vec![next(self, var)?];
        let mut trailing = false;
        while self.eat(op) {
            if self.peek_closer() {
                trailing = true;
                break;
            }
            items.push(next(self, var)?);
        }
        Ok(if items.len() == 1 && !trailing {
            items.pop().unwrap()
        } else if op == '|' {
            Formula::Or(items)
        } else {
            Formula::And(items)
        })
    }

    fn unary<V>(
        &mut self,
        var: &mut dyn FnMut(&str) -> Result<V, String>,
    ) -> Result<Formula<V>, GadgetError> {
        if self.eat('~') || self.eat('!') {
            return Ok(self.unary(var)?.not());
        }
        if self.eat('(') {
            let inner = self.nary(var, '|')?;
            if !self.eat(')') {
                return self.error("expected `)`");
            }
            return Ok(inner);
        }
        self.skip_ws();
        let start = self.pos;
        while self.text[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let word = &self.text[start..self.pos];
        match word {
            "" => self.error("expected a variable"),
            "true" => Ok(Formula::constant(true)),
            "false" => Ok(Formula::constant(false)),
            _ => var(word).map(Formula::Var).or_else(|msg| {
                self.pos = start;
                self.error(msg)
            }),
        }
    }
}

/// Resolves `x<i>_<r>` identifiers.
pub fn parse_crr_formula(text: &str) -> Result<CrrFormula, GadgetError> {
    parse_formula(text, &mut |w: &str| {
        let bad = || format!("`{w}` is not a residue variable x<i>_<r>");
        let rest = w.strip_prefix('x').ok_or_else(bad)?;
        let (i, r) = rest.split_once('_').ok_or_else(bad)?;
        Ok(CrrVar {
            i: i.parse().map_err(|_| bad())?,
            r: r.parse().map_err(|_| bad())?,
        })
    })
}

/// Resolves `x<i>` identifiers with `i >= 1`.
pub fn parse_bool_formula(text: &str) -> Result<BoolFormula, GadgetError> {
    parse_formula(text, &mut |w: &str| {
        w.strip_prefix('x')
            .and_then(|i| i.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| format!("`{w}` is not a variable x<i>"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::crr;
    use num_bigint::BigUint;

    #[test]
    fn elimination_examples() {
        let f = CrrFormula::x(1, 0).not();
        assert_eq!(
            eliminate_negations(&f, &[2]).unwrap(),
            Formula::Or(vec![CrrFormula::x(1, 1)])
        );
        let f = CrrFormula::x(2, 1).not();
        assert_eq!(
            eliminate_negations(&f, &[2, 3]).unwrap(),
            Formula::Or(vec![CrrFormula::x(2, 0), CrrFormula::x(2, 2)])
        );
        let f = CrrFormula::x(1, 1).not().not();
        assert_eq!(eliminate_negations(&f, &[2]).unwrap(), CrrFormula::x(1, 1));
        assert!(matches!(
            eliminate_negations(&CrrFormula::x(1, 2), &[2]),
            Err(GadgetError::VariableOutOfRange { i: 1, r: 2 })
        ));
    }

    #[test]
    fn elimination_preserves_meaning() {
        let primes = [2, 3];
        let f = CrrFormula::x(1, 1)
            .and(CrrFormula::x(2, 2).not())
            .or(CrrFormula::x(2, 0).or(CrrFormula::x(1, 0)).not())
            .not();
        let g = eliminate_negations(&f, &primes).unwrap();
        assert!(g.is_negation_free());
        for m in 0u32..6 {
            let a = crr(&primes, &BigUint::from(m)).unwrap();
            assert_eq!(f.eval_crr(&a), g.eval_crr(&a), "M = {m}");
        }
    }

    #[test]
    fn sizes() {
        let f = CrrFormula::x(1, 0).and(CrrFormula::x(2, 1));
        assert_eq!(f.size(), 3);
        assert_eq!(Formula::And(vec![f.clone(), f.clone(), f]).size(), 11);
        assert_eq!(CrrFormula::constant(false).size(), 1);
        assert_eq!(CrrFormula::x(1, 0).not().size(), 2);
    }

    #[test]
    fn text_round_trip() {
        for text in [
            "x1_0 & (x2_1 | ~x1_1)",
            "true",
            "false",
            "(x1_0 &)",
            "~(x1_0 | x2_2) & x2_0 & x1_1",
        ] {
            let f = parse_crr_formula(text).unwrap();
            assert_eq!(f.to_string(), text);
            assert_eq!(parse_crr_formula(&f.to_string()).unwrap(), f);
        }
        assert!(parse_crr_formula("x1").is_err());
        assert!(parse_crr_formula("x1_0 &").is_ok());
        assert!(parse_bool_formula("x0").is_err());
        assert_eq!(
            parse_bool_formula("x1 | ~x2").unwrap(),
            Formula::Var(1).or(Formula::Var(2).not())
        );
    }
}
