//! Model checking for one-counter processes.
//!
//! The crate contains
//!
//! - the data model of one-counter processes and nets ([`ocp`]), NFAs
//!   ([`nfa`]) and their text formats ([`text`]);
//! - CTL syntax and measures ([`ctl`]);
//! - a periodic CTL model checker that is exact for arbitrary counter values,
//!   plus two bounded evaluators used as independent oracles ([`checker`]);
//! - generators for the divisibility, QBF, Chinese-remainder, circuit and
//!   lex-max hardness constructions with brute-force ground truth
//!   ([`gadgets`]);
//! - one-counter MDPs with exact rational reachability values ([`ocmdp`]);
//! - the cross-validation suites used by the test harness and the CLI
//!   ([`suites`]).
//!
//! ```
//! use onecounter::{checker, ctl, text};
//!
//! let ocp = text::parse_ocp("ocp\nloc a b\nprop done : b\npos a -1 a\nzero a 0 b\n").unwrap();
//! let phi = ctl::parse("EF done").unwrap();
//! let a = ocp.loc("a").unwrap();
//! assert!(checker::check(&ocp, &phi, a, &1000u32.into()).unwrap());
//! ```

pub mod arith;
pub mod checker;
pub mod ctl;
pub mod gadgets;
pub mod nfa;
pub mod ocmdp;
pub mod ocp;
pub mod suites;
pub mod text;

pub use ctl::Ctl;
pub use nfa::Nfa;
pub use ocp::{Configuration, LocId, Ocp, OcpBuilder};

macro_rules! book_chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        )*
    };
}

book_chapters! {
    book_intro => "intro.md",
    book_processes => "processes.md",
    book_ctl => "ctl.md",
    book_periodic => "periodic.md",
    book_oracles => "oracles.md",
    book_gadgets => "gadgets.md",
    book_reductions => "reductions.md",
    book_mdp => "mdp.md",
    book_cli => "cli.md",
}
