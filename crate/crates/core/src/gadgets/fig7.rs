//! The fixed one-counter net used for divisibility tests, and the formula
//! families `phi_i` (divisibility by `2^i`) and `psi_i` (the `i`-th bit).
//!
//! Location `tb` stands for t-bar. Every location is labelled by the
//! proposition of the same name.

use crate::ctl::Ctl;
use crate::ocp::{Ocp, OcpBuilder};

pub const FIG7_LOCATIONS: [&str; 10] = ["t", "tb", "q0", "q1", "q2", "q3", "f", "g", "p0", "p1"];

/// Positive transitions as `(src, delta, dst)`.
pub const FIG7_POSITIVE: [(&str, i64, &str); 23] = [
    ("q0", -1, "q1"),
    ("q1", -1, "q2"),
    ("q2", -1, "q3"),
    ("q3", -1, "q0"),
    ("q1", -1, "q1"),
    ("q3", -1, "q3"),
    ("q0", 0, "t"),
    ("t", 0, "q0"),
    ("q1", 0, "tb"),
    ("tb", 0, "q1"),
    ("tb", 0, "q2"),
    ("q2", 0, "t"),
    ("q3", 0, "tb"),
    ("tb", 0, "q3"),
    ("t", 0, "f"),
    ("tb", -1, "f"),
    ("g", -1, "f"),
    ("f", -1, "g"),
    ("tb", 1, "p1"),
    ("p1", 0, "tb"),
    ("p1", 1, "p1"),
    ("p0", 0, "tb"),
    ("tb", 0, "p0"),
];

pub const FIG7_ZERO: [(&str, i64, &str); 5] = [
    ("t", 0, "q0"),
    ("t", 0, "f"),
    ("tb", 1, "p1"),
    ("p0", 0, "tb"),
    ("tb", 0, "p0"),
];

/// Builds an OCP from transition lists over the figure's locations, each
/// labelled by its own name.
pub fn labelled_ocp(zero: &[(&str, i64, &str)], positive: &[(&str, i64, &str)]) -> Ocp {
    let mut b = OcpBuilder::new();
    for name in FIG7_LOCATIONS {
        let l = b.location(name);
        b.label(name, l);
    }
    for &(src, d, dst) in zero {
        let (s, t) = (b.location(src), b.location(dst));
        b.zero(s, d, t).expect("valid zero delta");
    }
    for &(src, d, dst) in positive {
        let (s, t) = (b.location(src), b.location(dst));
        b.pos(s, d, t).expect("valid positive delta");
    }
    b.build().expect("non-empty")
}

pub fn figure7() -> Ocp {
    labelled_ocp(&FIG7_ZERO, &FIG7_POSITIVE)
}

fn test() -> Ctl {
    Ctl::atom("t").or(Ctl::atom("tb"))
}

fn diamond() -> Ctl {
    Ctl::any(["q0", "q1", "q2", "q3"].map(Ctl::atom))
}

/// `q0 & ~EX q1`: at `q0` this holds exactly when the counter is 0.
fn at_zero() -> Ctl {
    Ctl::atom("q0").and(Ctl::atom("q1").ex().not())
}

/// `mu_i = E[(diamond & EX phi_{i-1}) U (q0 & ~EX q1)]` for `i >= 2`.
pub fn mu(i: u32) -> Ctl {
    assert!(i >= 2, "mu_i is defined for i >= 2");
    diamond().and(phi_div(i - 1).ex()).eu(at_zero())
}

/// `phi_1 = test & EX(f & EF(f & ~EX g))`, `phi_i = test & EX mu_i`.
///
/// At `t` the formula holds iff `2^i` divides the counter; at `tb` iff it
/// does not.
pub fn phi_div(i: u32) -> Ctl {
    assert!(i >= 1, "phi_i is defined for i >= 1");
    if i == 1 {
        let f = || Ctl::atom("f");
        test().and(f().and(f().and(Ctl::atom("g").ex().not()).ef()).ex())
    } else {
        test().and(mu(i).ex())
    }
}

/// `psi_1 = phi_1`, `psi_i = tb & EX((q1 | q2) & mu_i)`. At `tb` the
/// formula holds iff bit `i` of the counter is 1.
pub fn psi_bit(i: u32) -> Ctl {
    assert!(i >= 1, "psi_i is defined for i >= 1");
    if i == 1 {
        phi_div(1)
    } else {
        Ctl::atom("tb").and(Ctl::atom("q1").or(Ctl::atom("q2")).and(mu(i)).ex())
    }
}
