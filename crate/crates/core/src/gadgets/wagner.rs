//! Lexicographic maximum parity as an EF property of a one-counter net.
//!
//! A skeleton guesses `M0` at `q0`, and three circuit copies check that
//! `psi(BIN(M0))` holds with `M0` even, that `M0 < 2^m`, and that no larger
//! `M < 2^m` satisfies `psi`. `x1` is the least significant bit.

use num_bigint::BigUint;

use crate::arith::{primes_first, primorial};
use crate::ctl::Ctl;
use crate::ocp::{LocId, Ocp, OcpBuilder};
use crate::text::content_lines;

use super::circuit::{ef_of_circuit, embed_circuit, GateKind, LayeredCircuit};
use super::formula::{BoolFormula, CrrVar, Formula};
use super::GadgetError;

#[derive(Debug, Clone)]
pub struct WagnerInstance {
    pub ocp: Ocp,
    pub start: LocId,
    pub goal: Ctl,
    pub primes: Vec<u64>,
}

impl WagnerInstance {
    /// Capped bound `prod primes + 2` used to decide the instance.
    pub fn bound(&self) -> usize {
        let p: u64 = self.primes.iter().product();
        p as usize + 2
    }
}

/// `psi(BIN(M))` with bit `i` of `M` assigned to `x_i`.
pub fn eval_bin(psi: &BoolFormula, value: u64) -> bool {
    psi.eval(&|&i: &usize| (1..=64).contains(&i) && (value >> (i - 1)) & 1 == 1)
}

/// Whether `psi` is satisfiable over `x_1..x_m` and its largest satisfying
/// `M < 2^m` is even.
pub fn lexmax_even_oracle(psi: &BoolFormula, m: u32) -> bool {
    assert!(m <= 20, "brute force limited to 20 variables");
    (0u64..1 << m)
        .rev()
        .find(|&v| eval_bin(psi, v))
        .is_some_and(|v| v % 2 == 0)
}

fn residues(primes: &[u64], value: u64) -> Vec<CrrVar> {
    primes
        .iter()
        .enumerate()
        .map(|(i, &p)| CrrVar { i: i + 1, r: value % p })
        .collect()
}

/// OR over one full residue conjunction per selected value.
fn dnf_circuit(values: &[u64], primes: &[u64]) -> LayeredCircuit {
    let terms: Vec<Vec<CrrVar>> = if values.is_empty() {
        vec![vec![CrrVar { i: 1, r: 0 }, CrrVar { i: 1, r: 1 }]]
    } else {
        values.iter().map(|&v| residues(primes, v)).collect()
    };
    let mut inputs: Vec<CrrVar> = terms.iter().flatten().copied().collect();
    inputs.sort_by_key(|v| (v.i, v.r));
    inputs.dedup();
    let index = |v: &CrrVar| inputs.iter().position(|w| w == v).expect("collected above");
    let ands = terms
        .iter()
        .map(|t| t.iter().map(index).collect())
        .collect::<Vec<Vec<usize>>>();
    let or = vec![(0..ands.len()).collect()];
    LayeredCircuit::new(vec![(GateKind::Or, or), (GateKind::And, ands)], inputs)
        .expect("well-formed DNF")
}

fn equals_circuit(value: u64, primes: &[u64]) -> LayeredCircuit {
    let inputs = residues(primes, value);
    let and = vec![(0..inputs.len()).collect()];
    LayeredCircuit::new(vec![(GateKind::And, and)], inputs).expect("well-formed conjunction")
}

/// Builds the net and the EF formula to be checked at `(q0, 0)`. The
/// formula holds iff [`lexmax_even_oracle`] does.
pub fn wagner_reduce(psi: &BoolFormula, m: u32) -> Result<WagnerInstance, GadgetError> {
    if m == 0 {
        return Err(GadgetError::NoVariables);
    }
    if m > 20 {
        return Err(GadgetError::InvalidCircuit(format!(
            "{m} variables exceed the explicit truth table"
        )));
    }
    let mut bad = None;
    psi.for_each_var(&mut |&i| {
        if i == 0 || i > m as usize {
            bad.get_or_insert(i);
        }
    });
    if let Some(i) = bad {
        return Err(GadgetError::UnboundVariable(format!("x{i}")));
    }
    let primes = primes_first((m as usize).max(2));
    debug_assert!(primorial(&primes) > BigUint::from(1u64 << m));
    let sat: Vec<u64> = (0u64..1 << m).filter(|&v| eval_bin(psi, v)).collect();
    let even: Vec<u64> = sat.iter().copied().filter(|v| v % 2 == 0).collect();
    let unsat: Vec<u64> = (0u64..1 << m).filter(|&v| !eval_bin(psi, v)).collect();
    let c_even = dnf_circuit(&even, &primes);
    let not_c = dnf_circuit(&unsat, &primes);
    let g = equals_circuit(1 << m, &primes);

    let mut b = OcpBuilder::new();
    let [q0, p, r, s] = ["q0", "p", "r", "s"].map(|n| b.location(n));
    for (prop, loc) in [("at_q0", q0), ("at_p", p), ("at_r", r), ("at_s", s)] {
        b.label(prop, loc);
    }
    b.both(q0, 1, q0)?.both(q0, 0, p)?.both(q0, 1, r)?;
    b.pos(p, -1, p)?.pos(r, 1, r)?.pos(r, 0, s)?.pos(s, -1, s)?;
    for (prefix, src, c) in [
        ("c/", q0, &c_even),
        ("nc/", r, &not_c),
        ("gp/", p, &g),
        ("gs/", s, &g),
    ] {
        let entry = embed_circuit(&mut b, prefix, c, &primes)?;
        b.label(&format!("in_{}", prefix.trim_end_matches('/')), entry);
        b.both(src, 0, entry)?;
    }

    let at = |n: &str| Ctl::atom(&format!("at_{n}"));
    let probe = |copy: &str, c: &LayeredCircuit| {
        Ctl::atom(&format!("in_{copy}")).and(ef_of_circuit(c)).ex()
    };
    // From p (or s) the counter 2^m can be reached by decrementing.
    let reaches_g = |side: &str, copy: &str| {
        at(side).and(at(side).and(probe(copy, &g)).ef()).ex()
    };
    let larger_solution = at("r")
        .and(reaches_g("s", "gs").not())
        .and(probe("nc", &not_c).not())
        .ef();
    let goal = at("q0")
        .and(probe("c", &c_even))
        .and(reaches_g("p", "gp").not())
        .and(at("r").and(larger_solution).ex().not())
        .ef();
    Ok(WagnerInstance {
        ocp: b.build()?,
        start: q0,
        goal,
        primes,
    })
}

/// Reads a DIMACS CNF. Returns the formula and the declared variable count.
pub fn parse_dimacs(text: &str) -> Result<(BoolFormula, u32), GadgetError> {
    let mut vars = None;
    let mut clauses = Vec::new();
    let mut clause = Vec::new();
    for (line, words) in content_lines(text) {
        let err = |msg: String| GadgetError::Syntax { line, msg };
        match words[0] {
            "c" => continue,
            "p" => {
                if words.len() != 4 || words[1] != "cnf" {
                    return Err(err("expected `p cnf VARS CLAUSES`".into()));
                }
                vars = Some(
                    words[2]
                        .parse::<u32>()
                        .map_err(|_| err(format!("bad variable count `{}`", words[2])))?,
                );
            }
            _ => {
                let n = vars.ok_or_else(|| err("clause before `p cnf` header".into()))?;
                for w in words {
                    let lit: i64 = w.parse().map_err(|_| err(format!("bad literal `{w}`")))?;
                    if lit == 0 {
                        clauses.push(Formula::Or(std::mem::take(&mut clause)));
                        continue;
                    }
                    let v = lit.unsigned_abs() as usize;
                    if v > n as usize {
                        return Err(GadgetError::UnboundVariable(format!("x{v}")));
                    }
                    let x = Formula::Var(v);
                    clause.push(if lit > 0 { x } else { x.not() });
                }
            }
        }
    }
    if !clause.is_empty() {
        clauses.push(Formula::Or(clause));
    }
    let vars = vars.ok_or(GadgetError::Syntax {
        line: 1,
        msg: "missing `p cnf` header".into(),
    })?;
    Ok((Formula::And(clauses), vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::capped_stable;
    use crate::gadgets::formula::parse_bool_formula;

    fn verdict(psi: &BoolFormula, m: u32) -> Option<bool> {
        let w = wagner_reduce(psi, m).unwrap();
        capped_stable(&w.ocp, &w.goal, w.start, 0, w.bound()).definite()
    }

    #[test]
    fn oracle_examples() {
        let x1 = parse_bool_formula("x1").unwrap();
        assert!(!lexmax_even_oracle(&x1, 1));
        assert!(lexmax_even_oracle(&x1.clone().not(), 1));
        assert!(!lexmax_even_oracle(&Formula::constant(false), 2));
        assert!(!lexmax_even_oracle(&parse_bool_formula("x1 | x2").unwrap(), 2));
        assert!(!lexmax_even_oracle(&parse_bool_formula("x1 & ~x2").unwrap(), 2));
        assert!(lexmax_even_oracle(&parse_bool_formula("~x1 & x2").unwrap(), 2));
    }

    #[test]
    fn reduction_matches_oracle() {
        for text in ["x1 | x2", "x1 & ~x2", "~x1 & x2", "x1 & ~x1", "~x1", "x2"] {
            let psi = parse_bool_formula(text).unwrap();
            assert_eq!(
                verdict(&psi, 2),
                Some(lexmax_even_oracle(&psi, 2)),
                "{text}"
            );
        }
    }

    #[test]
    fn goal_is_ef() {
        let w = wagner_reduce(&parse_bool_formula("x1").unwrap(), 1).unwrap();
        assert!(w.goal.is_ef());
        assert_eq!(w.primes, vec![2, 3]);
        assert!(wagner_reduce(&parse_bool_formula("x3").unwrap(), 2).is_err());
        assert!(matches!(
            wagner_reduce(&Formula::constant(true), 0),
            Err(GadgetError::NoVariables)
        ));
    }

    #[test]
    fn dimacs() {
        let (f, n) = parse_dimacs("c example\np cnf 2 2\n1 -2 0\n2 0\n").unwrap();
        assert_eq!(n, 2);
        assert_eq!(f.to_string(), "(x1 | ~x2) & (x2 |)");
        assert!(eval_bin(&f, 3));
        assert!(!eval_bin(&f, 1));
        assert!(parse_dimacs("1 0\n").is_err());
        assert!(parse_dimacs("p cnf 1 1\n2 0\n").is_err());
    }
}
