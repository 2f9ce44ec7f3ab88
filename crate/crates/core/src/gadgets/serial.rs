//! Serial composition: an NFA reads the leaf string
//! `F(CRR(0)) F(CRR(1)) ... F(CRR(2^m - 1))` while the counter enumerates
//! `M`, and acceptance becomes a CTL property of a one-counter net.

use num_bigint::BigUint;

use crate::arith::crr_unchecked;
use crate::ctl::Ctl;
use crate::nfa::Nfa;
use crate::ocp::{LocId, Ocp, OcpBuilder};

use super::crr::{check_range, fixed_ef_formula, leaf_conjunction, ocn_of_crr_formula};
use super::formula::CrrFormula;
use super::GadgetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerialVariant {
    /// Goal `E[phi U rho]` with `rho` marking the exit of the final check.
    Until,
    /// Goal `EG phi`; the final check loops back to its entry.
    Globally,
}

#[derive(Debug, Clone)]
pub struct SerialInstance {
    pub ocp: Ocp,
    pub start: LocId,
    pub goal: Ctl,
}

pub const RHO: &str = "rho";

/// Builds the composed net. Each `b`-labelled NFA transition `(s, b, t)`
/// gets its own copy of the residue net of `F & ~G` (for `b = 1`) or
/// `~F & ~G` (for `b = 0`), entered from `s` and left towards `t` with an
/// increment. Final states enter a copy of the net of `G`, which holds
/// exactly at the counter value `2^m`. `G` must be a conjunction of leaves.
pub fn serial_compose(
    a: &Nfa,
    f: &CrrFormula,
    g: &CrrFormula,
    primes: &[u64],
    variant: SerialVariant,
) -> Result<SerialInstance, GadgetError> {
    if leaf_conjunction(g).is_none() {
        return Err(GadgetError::NotLeafConjunction);
    }
    let not_g = g.clone().not();
    let one = ocn_of_crr_formula(&f.clone().and(not_g.clone()), primes)?;
    let zero = ocn_of_crr_formula(&f.clone().not().and(not_g), primes)?;
    let check = ocn_of_crr_formula(g, primes)?;

    let mut b = OcpBuilder::new();
    let states: Vec<LocId> = (0..a.num_states())
        .map(|s| b.location(&format!("s_{}", a.name(s))))
        .collect();
    for (j, &(s, bit, t)) in a.transitions().iter().enumerate() {
        let gadget = if bit { &one } else { &zero };
        let map = b.embed(&format!("t{j}/"), &gadget.ocp);
        let input = map[gadget.input.index()];
        let output = map[gadget.output.expect("formula nets have an exit").index()];
        b.both(states[s], 0, input)?;
        b.both(output, 1, states[t])?;
    }
    let map = b.embed("g/", &check.ocp);
    let input = map[check.input.index()];
    let output = map[check.output.expect("formula nets have an exit").index()];
    for s in (0..a.num_states()).filter(|&s| a.is_final(s)) {
        b.both(states[s], 0, input)?;
    }
    let goal = match variant {
        SerialVariant::Until => {
            b.label(RHO, output);
            fixed_ef_formula().eu(Ctl::atom(RHO))
        }
        SerialVariant::Globally => {
            b.both(output, 0, input)?;
            fixed_ef_formula().eg()
        }
    };
    Ok(SerialInstance {
        ocp: b.build()?,
        start: states[a.initial()],
        goal,
    })
}

/// The leaf string of `F` over `M = 0, ..., 2^m - 1`.
pub fn leaf_string(f: &CrrFormula, primes: &[u64], m: u32) -> Result<Vec<bool>, GadgetError> {
    check_range(primes, m)?;
    Ok((0u64..1 << m)
        .map(|value| f.eval_crr(&crr_unchecked(primes, &BigUint::from(value))))
        .collect())
}

/// Whether the NFA accepts the leaf string of `F`.
pub fn leafstring_oracle(
    a: &Nfa,
    f: &CrrFormula,
    primes: &[u64],
    m: u32,
) -> Result<bool, GadgetError> {
    Ok(a.accepts(&leaf_string(f, primes, m)?))
}
