//! One-counter nets that test a Boolean formula over the Chinese remainder
//! representation of the counter.
//!
//! The net walks the formula depth first: a disjunction branches, a
//! conjunction visits its children in sequence and a leaf `x_{i,r}` passes
//! through. At every leaf the fixed formula [`fixed_ef_formula`] forces a side
//! branch that subtracts `r` and then multiples of `p_i`, and requires that it
//! can hit counter 0 exactly, i.e. that the counter is `r` modulo `p_i`.
//!
//! Counter 0 is detected by the absence of a `gamma` successor. To keep that
//! test exact after unit expansion, every intermediate location of a weighted
//! edge and the sink `bot` itself have a 0-step into `bot` (labelled `gamma`),
//! so only `div(p_i)` at counter 0 lacks a `gamma` successor. `bot` is also
//! labelled `alpha`, which makes the fixed formula false there, so the sink
//! never extends a path of fixed-formula states.

use std::collections::BTreeSet;

use num_bigint::BigUint;

use crate::arith::crr_unchecked;
use crate::ctl::Ctl;
use crate::ocp::{normalize_weighted, LocId, NormalizedOcp, Ocp, Side, WeightedOcpSpec};

use super::formula::{eliminate_negations, CrrFormula, Formula};
use super::GadgetError;

pub const ALPHA: &str = "alpha";
pub const BETA: &str = "beta";
pub const GAMMA: &str = "gamma";
pub const BOT: &str = "bot";
/// Label put on the exit by [`exit_goal`].
pub const EXIT: &str = "exit";

/// A net with distinguished entry and (optionally) exit locations.
#[derive(Debug, Clone)]
pub struct GadgetOcn {
    pub ocp: Ocp,
    pub input: LocId,
    pub output: Option<LocId>,
}

/// `alpha -> EX(beta & EF ~EX gamma)`.
pub fn fixed_ef_formula() -> Ctl {
    Ctl::atom(ALPHA).implies(
        Ctl::atom(BETA)
            .and(Ctl::atom(GAMMA).ex().not().ef())
            .ex(),
    )
}

/// The net with its exit labelled [`EXIT`], and `E[fixed U exit]`: at
/// `(input, M)` the formula holds iff the net's formula holds at `CRR(M)`.
pub fn exit_goal(g: &GadgetOcn) -> Result<(Ocp, Ctl), GadgetError> {
    let mut b = g.ocp.to_builder();
    let exit = g.output.ok_or(GadgetError::NoExit)?;
    b.label(EXIT, exit);
    Ok((b.build()?, fixed_ef_formula().eu(Ctl::atom(EXIT))))
}

pub(crate) fn div_name(p: u64) -> String {
    format!("div{p}")
}

/// Weighted description of a residue-testing net under construction.
pub(crate) struct ResidueNet {
    pub spec: WeightedOcpSpec,
    primes: Vec<u64>,
    used: BTreeSet<usize>,
    /// Indices into `spec.pos` of leaf branches whose chain locations are
    /// labelled `beta`.
    branches: BTreeSet<usize>,
}

impl ResidueNet {
    pub fn new(primes: &[u64]) -> Self {
        let mut spec = WeightedOcpSpec::new();
        spec.location(BOT)
            .label(GAMMA, BOT)
            .label(ALPHA, BOT)
            .both(BOT, 0, BOT);
        ResidueNet {
            spec,
            primes: primes.to_vec(),
            used: BTreeSet::new(),
            branches: BTreeSet::new(),
        }
    }

    /// Adds the branch from `loc` that tests `counter = r (mod p_i)`.
    pub fn branch(&mut self, loc: &str, i: usize, r: u64) {
        let p = self.primes[i - 1];
        let div = div_name(p);
        if self.used.insert(i) {
            self.spec
                .label(BETA, &div)
                .pos(&div, -(p as i64), &div)
                .pos(&div, -1, BOT);
        }
        self.spec.label(ALPHA, loc);
        if r == 0 {
            self.spec.both(loc, 0, &div);
        } else {
            self.branches.insert(self.spec.pos.len());
            self.spec.pos(loc, -(r as i64), &div);
        }
    }

    pub fn finish(self) -> Result<NormalizedOcp, GadgetError> {
        let mut n = normalize_weighted(&self.spec)?;
        let mut b = n.ocp.to_builder();
        let bot = b.location(BOT);
        for fresh in &n.fresh {
            b.both(fresh.loc, 0, bot)?;
            if fresh.side == Side::Positive && self.branches.contains(&fresh.transition) {
                b.label(BETA, fresh.loc);
            }
        }
        n.ocp = b.build()?;
        Ok(n)
    }
}

fn in_name(path: &str) -> String {
    format!("in{path}")
}

fn out_name(path: &str) -> String {
    format!("out{path}")
}

/// The residue-testing net of a formula: for `0 <= M < prod primes` there
/// is a path of [`fixed_ef_formula`] states from `(in, M)` to `(out, M)` iff
/// `F(CRR(M))` holds. Negations are eliminated first.
pub fn ocn_of_crr_formula(f: &CrrFormula, primes: &[u64]) -> Result<GadgetOcn, GadgetError> {
    if primes.is_empty() {
        return Err(GadgetError::NoPrimes);
    }
    let f = eliminate_negations(f, primes)?;
    let mut net = ResidueNet::new(primes);
    fn walk(f: &CrrFormula, path: &str, net: &mut ResidueNet) {
        let (i, o) = (in_name(path), out_name(path));
        net.spec.location(&i).location(&o);
        match f {
            Formula::Var(v) => {
                net.spec.both(&i, 0, &o);
                net.branch(&i, v.i, v.r);
            }
            Formula::Or(xs) => {
                for (k, x) in xs.iter().enumerate() {
                    let sub = format!("{path}.{k}");
                    walk(x, &sub, net);
                    net.spec.both(&i, 0, &in_name(&sub));
                    net.spec.both(&out_name(&sub), 0, &o);
                }
            }
            Formula::And(xs) => {
                let mut prev = i.clone();
                for (k, x) in xs.iter().enumerate() {
                    let sub = format!("{path}.{k}");
                    walk(x, &sub, net);
                    net.spec.both(&prev, 0, &in_name(&sub));
                    prev = out_name(&sub);
                }
                net.spec.both(&prev, 0, &o);
            }
            Formula::Not(_) => unreachable!("negations were eliminated"),
        }
    }
    walk(&f, "", &mut net);
    let n = net.finish()?;
    let ocp = n.ocp;
    Ok(GadgetOcn {
        input: ocp.loc(&in_name(""))?,
        output: Some(ocp.loc(&out_name(""))?),
        ocp,
    })
}

/// `/\_i x_{i, target mod p_i}`.
pub fn crr_equals_formula(primes: &[u64], target: &BigUint) -> CrrFormula {
    let a = crr_unchecked(primes, target);
    Formula::And(
        a.residues()
            .iter()
            .enumerate()
            .map(|(i, &r)| CrrFormula::x(i + 1, r))
            .collect(),
    )
}

/// The disjunction, over all `M < 2^m` with `truth[M]`, of the residue
/// conjunction of `M`. Evaluated on `CRR(M)` for `M < 2^m` it gives
/// `truth[M]`.
pub fn crr_formula_of_predicate(
    truth: &[bool],
    primes: &[u64],
    m: u32,
) -> Result<CrrFormula, GadgetError> {
    check_range(primes, m)?;
    if truth.len() != 1usize << m {
        return Err(GadgetError::TruthTableLength {
            expected: 1usize << m,
            found: truth.len(),
        });
    }
    Ok(Formula::Or(
        truth
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(value, _)| crr_equals_formula(primes, &BigUint::from(value)))
            .collect(),
    ))
}

/// Requires `2^m <= prod primes`.
pub(crate) fn check_range(primes: &[u64], m: u32) -> Result<(), GadgetError> {
    let product = crate::arith::primorial(primes);
    if BigUint::from(1u32) << m > product {
        return Err(GadgetError::PrimesTooSmall { m, product });
    }
    Ok(())
}

/// The residues `(M mod p_1, ..., M mod p_m)` as used by a conjunction of
/// leaves, or `None` if the formula is not such a conjunction.
pub(crate) fn leaf_conjunction(f: &CrrFormula) -> Option<Vec<(usize, u64)>> {
    match f {
        Formula::Var(v) => Some(vec![(v.i, v.r)]),
        Formula::And(xs) => xs
            .iter()
            .map(|x| match x {
                Formula::Var(v) => Some((v.i, v.r)),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::crr;
    use crate::checker::BoundedOracle;

    fn reaches_out(g: &GadgetOcn, m: usize) -> bool {
        let mut b = g.ocp.to_builder();
        b.label("exit", g.output.unwrap());
        let o = b.build().unwrap();
        let goal = fixed_ef_formula().eu(Ctl::atom("exit"));
        let mut oracle = BoundedOracle::new(&o, &goal, m.max(1));
        oracle.query(g.input, m).verdict.definite().unwrap()
    }

    #[test]
    fn single_leaf() {
        let g = ocn_of_crr_formula(&CrrFormula::x(1, 0), &[2]).unwrap();
        assert!(g.ocp.is_net());
        assert!(reaches_out(&g, 0));
        assert!(!reaches_out(&g, 1));
        assert!(reaches_out(&g, 4));
    }

    #[test]
    fn conjunction_of_residues() {
        let f = CrrFormula::x(1, 1).and(CrrFormula::x(2, 2));
        let g = ocn_of_crr_formula(&f, &[2, 3]).unwrap();
        for m in 0..6usize {
            assert_eq!(reaches_out(&g, m), m == 5, "M = {m}");
        }
    }

    #[test]
    fn fixed_formula_shape() {
        let phi = fixed_ef_formula();
        assert!(phi.is_ef());
        assert_eq!(phi.lud(), 1);
    }

    #[test]
    fn equals_formula() {
        assert_eq!(
            crr_equals_formula(&[2, 3], &4u32.into()),
            Formula::And(vec![CrrFormula::x(1, 0), CrrFormula::x(2, 1)])
        );
        assert_eq!(
            crr_equals_formula(&[2, 3, 5], &0u32.into()),
            Formula::And(vec![
                CrrFormula::x(1, 0),
                CrrFormula::x(2, 0),
                CrrFormula::x(3, 0)
            ])
        );
    }

    #[test]
    fn predicate_round_trip() {
        let primes = [2, 3];
        let truth = [false, true, true, false];
        let f = crr_formula_of_predicate(&truth, &primes, 2).unwrap();
        for (m, &t) in truth.iter().enumerate() {
            assert_eq!(f.eval_crr(&crr(&primes, &BigUint::from(m)).unwrap()), t);
        }
        let single = crr_formula_of_predicate(&[false, false, true, false], &primes, 2).unwrap();
        assert_eq!(
            single,
            Formula::Or(vec![Formula::And(vec![
                CrrFormula::x(1, 0),
                CrrFormula::x(2, 2)
            ])])
        );
        assert_eq!(
            crr_formula_of_predicate(&[false; 4], &primes, 2).unwrap(),
            CrrFormula::constant(false)
        );
        assert!(crr_formula_of_predicate(&[false; 8], &[2], 3).is_err());
    }
}
