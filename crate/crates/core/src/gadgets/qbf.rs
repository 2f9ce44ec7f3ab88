//! Reduction from quantified Boolean formulas to CTL over the fixed net.
//!
//! Variable `x_i` (with `x_1` innermost) is encoded by bit `i` of the counter
//! at `tb`. Choosing `x_i = 1` walks `tb -> p1 -> ... -> tb` and adds
//! `2^(i-1)`; choosing `x_i = 0` walks `tb -> p0 -> tb`.

use std::collections::HashMap;
use std::fmt;

use crate::ctl::Ctl;

use super::fig7::{phi_div, psi_bit};
use super::formula::{parse_formula, BoolFormula, Formula};
use super::GadgetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// A prenex QBF `Q_k x_k ... Q_1 x_1 . beta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    /// `quantifiers[i - 1]` binds `x_i`, so the last entry is outermost.
    pub quantifiers: Vec<Quantifier>,
    pub matrix: BoolFormula,
}

impl Qbf {
    pub fn new(quantifiers: Vec<Quantifier>, matrix: BoolFormula) -> Result<Qbf, GadgetError> {
        let q = Qbf {
            quantifiers,
            matrix,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn num_vars(&self) -> usize {
        self.quantifiers.len()
    }

    fn validate(&self) -> Result<(), GadgetError> {
        if self.quantifiers.is_empty() {
            return Err(GadgetError::EmptyPrefix);
        }
        let k = self.num_vars();
        let mut bad = None;
        self.matrix.for_each_var(&mut |&i| {
            if i == 0 || i > k {
                bad.get_or_insert(i);
            }
        });
        match bad {
            Some(i) => Err(GadgetError::UnboundVariable(format!("x{i}"))),
            None => Ok(()),
        }
    }

    /// Brute-force truth value.
    pub fn is_valid(&self) -> bool {
        fn go(q: &Qbf, i: usize, assignment: &mut Vec<bool>) -> bool {
            if i == 0 {
                return q.matrix.eval(&|&v: &usize| assignment[v - 1]);
            }
            let mut branch = |b: bool| {
                assignment[i - 1] = b;
                go(q, i - 1, assignment)
            };
            match q.quantifiers[i - 1] {
                Quantifier::Exists => branch(false) || branch(true),
                Quantifier::Forall => branch(false) && branch(true),
            }
        }
        go(self, self.num_vars(), &mut vec![false; self.num_vars()])
    }
}

impl fmt::Display for Qbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.quantifiers.iter().enumerate().rev() {
            let word = match q {
                Quantifier::Exists => "exists",
                Quantifier::Forall => "forall",
            };
            write!(f, "{word} x{} ", i + 1)?;
        }
        write!(f, ": {}", self.matrix)
    }
}

/// Parses `forall a exists b : (a & ~b) | b`. Variables are renumbered by
/// prefix position, the innermost becoming `x1`.
pub fn parse_qbf(text: &str) -> Result<Qbf, GadgetError> {
    let text = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join(" ");
    let (prefix, matrix) = text.split_once(':').ok_or_else(|| GadgetError::Syntax {
        line: 0,
        msg: "expected `PREFIX : MATRIX`".into(),
    })?;
    let words: Vec<&str> = prefix.split_whitespace().collect();
    if !words.len().is_multiple_of(2) {
        return Err(GadgetError::Syntax {
            line: 0,
            msg: "quantifier without variable".into(),
        });
    }
    let mut names: Vec<&str> = Vec::new();
    let mut quants = Vec::new();
    for pair in words.chunks(2) {
        let q = match pair[0] {
            "exists" => Quantifier::Exists,
            "forall" => Quantifier::Forall,
            other => {
                return Err(GadgetError::Syntax {
                    line: 0,
                    msg: format!("expected a quantifier, found `{other}`"),
                })
            }
        };
        if names.contains(&pair[1]) {
            return Err(GadgetError::DuplicateBinding(pair[1].to_string()));
        }
        names.push(pair[1]);
        quants.push(q);
    }
    let k = names.len();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(j, n)| (*n, k - j)).collect();
    let matrix = parse_formula(matrix, &mut |w: &str| {
        index
            .get(w)
            .copied()
            .ok_or_else(|| format!("variable `{w}` is not bound by the prefix"))
    })
    .map_err(|e| match e {
        GadgetError::Syntax { msg, .. } if msg.contains("not bound") => {
            GadgetError::UnboundVariable(msg)
        }
        e => e,
    })?;
    quants.reverse();
    Qbf::new(quants, matrix)
}

fn matrix_to_ctl(f: &BoolFormula) -> Ctl {
    match f {
        Formula::Var(i) => psi_bit(*i as u32),
        Formula::Not(a) => matrix_to_ctl(a).not(),
        Formula::And(xs) => Ctl::all(xs.iter().map(matrix_to_ctl)),
        Formula::Or(xs) => Ctl::any(xs.iter().map(matrix_to_ctl)),
    }
}

fn step(q: Quantifier, body: Ctl) -> Ctl {
    let choice = Ctl::atom("p0").or(Ctl::atom("p1"));
    match q {
        Quantifier::Exists => choice.and(body).ex(),
        Quantifier::Forall => choice.implies(body).ax(),
    }
}

/// The formula `theta`, to be evaluated at `(tb, 0)` on the fixed net:
///
/// ```text
/// theta_1 = Q_1 X((p0 | p1) o_1 EX(tb & beta'))
/// theta_i = Q_i X((p0 | p1) o_i E[(p0 | EX(tb & phi_{i-1})) U (land_i | p1 & EX land_i)])
/// land_i  = tb & ~phi_{i-1} & theta_{i-1}
/// ```
///
/// where `beta'` replaces `x_i` by `psi_i`, `Q X` is `EX`/`AX` and `o` is
/// `&`/`->` for an existential/universal quantifier. The walk through `p1`
/// stops at the first multiple of `2^{i-1}`, which no longer satisfies the
/// walk condition itself, so the target also accepts a `p1` state one step
/// before landing.
pub fn qbf_reduce(alpha: &Qbf) -> Result<Ctl, GadgetError> {
    alpha.validate()?;
    let tb = || Ctl::atom("tb");
    let mut theta = step(
        alpha.quantifiers[0],
        tb().and(matrix_to_ctl(&alpha.matrix)).ex(),
    );
    for i in 2..=alpha.num_vars() {
        let prev = phi_div(i as u32 - 1);
        let walk = Ctl::atom("p0").or(tb().and(prev.clone()).ex());
        let land = tb().and(prev.not()).and(theta);
        let target = land.clone().or(Ctl::atom("p1").and(land.ex()));
        theta = step(alpha.quantifiers[i - 1], walk.eu(target));
    }
    Ok(theta)
}
