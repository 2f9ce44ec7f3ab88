//! Hardness constructions, each with a brute-force ground truth.
//!
//! - [`fig7`]: the fixed net and the divisibility and bit formulas.
//! - [`qbf`]: QBF to CTL over the fixed net.
//! - [`crr`]: nets testing Boolean formulas over residues of the counter.
//! - [`serial`]: an NFA run over a leaf string, as EU or EG.
//! - [`circuit`]: layered circuits as EF formulas.
//! - [`wagner`]: lex-max parity as an EF formula.

use num_bigint::BigUint;
use thiserror::Error;

use crate::nfa::NfaError;
use crate::ocp::OcpError;

pub mod circuit;
pub mod crr;
pub mod fig7;
pub mod formula;
pub mod qbf;
pub mod serial;
pub mod wagner;

pub use circuit::{ef_of_circuit, ocn_of_circuit, parse_circuit, write_circuit, GateKind, LayeredCircuit};
pub use crr::{
    crr_equals_formula, crr_formula_of_predicate, exit_goal, fixed_ef_formula, ocn_of_crr_formula,
    GadgetOcn,
};
pub use fig7::{figure7, mu, phi_div, psi_bit};
pub use formula::{
    eliminate_negations, parse_bool_formula, parse_crr_formula, BoolFormula, CrrFormula, CrrVar,
    Formula,
};
pub use qbf::{parse_qbf, qbf_reduce, Quantifier, Qbf};
pub use serial::{leaf_string, leafstring_oracle, serial_compose, SerialInstance, SerialVariant};
pub use wagner::{lexmax_even_oracle, parse_dimacs, wagner_reduce, WagnerInstance};

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("variable x{i}_{r} is outside the prime list")]
    VariableOutOfRange { i: usize, r: u64 },
    #[error("empty prime list")]
    NoPrimes,
    #[error("2^{m} exceeds the product {product} of the primes")]
    PrimesTooSmall { m: u32, product: BigUint },
    #[error("truth table has {found} entries, expected {expected}")]
    TruthTableLength { expected: usize, found: usize },
    #[error("empty quantifier prefix")]
    EmptyPrefix,
    #[error("unbound variable: {0}")]
    UnboundVariable(String),
    #[error("variable {0} is bound twice")]
    DuplicateBinding(String),
    #[error("formula is not a conjunction of residue variables")]
    NotLeafConjunction,
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("at least one variable is required")]
    NoVariables,
    #[error("the net has no exit location")]
    NoExit,
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error(transparent)]
    Nfa(#[from] NfaError),
}
