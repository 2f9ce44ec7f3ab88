//! CTL evaluation over one-counter processes.
//!
//! Three evaluators share one fixpoint engine over finite counter windows
//! `Q x [0, top]`:
//!
//! - [`evaluate_periodic`] is exact for every counter value. Above a
//!   threshold `t(phi)` satisfaction only depends on the counter modulo a
//!   period `K_phi`, so the engine works on the *wrapped* window
//!   `Q x [0, t + K]` where an increment out of the window lands on `t + 1`.
//! - [`evaluate_capped`] deletes every move that leaves `Q x [0, B]`. It is
//!   only an approximation.
//! - [`evaluate_three_valued`] treats configurations above `B` as unknown and
//!   evaluates with Kleene logic, so every definite answer is correct.
//!
//! [`oracle_check`] and [`BoundedOracle`] combine the two bounded evaluators
//! with escalating bounds.

use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::lcm_upto;
use crate::ctl::{CoreDag, Ctl, Node};
use crate::ocp::{LocId, Ocp, OcpError, Side};

/// Default limit on the number of configurations in a wrapped window.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error(
        "infeasible, use bounded oracle: the wrapped domain has {domain} configurations \
         (budget {budget})"
    )]
    Infeasible { domain: BigUint, budget: u64 },
    #[error(transparent)]
    Ocp(#[from] OcpError),
}

/// Thresholds and periods of every core subformula.
#[derive(Debug, Clone)]
pub struct PeriodParameters {
    k: usize,
    lcm: BigUint,
    dag: CoreDag,
    entries: Vec<PeriodEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodEntry {
    /// `K_psi = K^lud(psi)`.
    pub period: BigUint,
    /// `t(psi)`.
    pub threshold: BigUint,
    /// `|psi|` of the subformula as a tree.
    pub size: u64,
    pub lud: u32,
}

impl PeriodParameters {
    /// `k = |Q|`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `K = LCM([k])`.
    pub fn lcm(&self) -> &BigUint {
        &self.lcm
    }

    pub fn dag(&self) -> &CoreDag {
        &self.dag
    }

    /// Entries indexed like [`CoreDag::nodes`].
    pub fn entries(&self) -> &[PeriodEntry] {
        &self.entries
    }

    pub fn root(&self) -> &PeriodEntry {
        &self.entries[self.dag.root()]
    }

    pub fn threshold(&self) -> &BigUint {
        &self.root().threshold
    }

    pub fn period(&self) -> &BigUint {
        &self.root().period
    }

    /// Number of configurations of the wrapped window `Q x [0, t + K]`.
    pub fn domain_size(&self) -> BigUint {
        (self.threshold() + self.period() + 1u32) * self.k
    }

    /// The counter value in `[0, t + K]` that agrees with `n` on the goal
    /// formula: `n` itself up to `t`, else the unique value in
    /// `[t + 1, t + K]` congruent to `n` modulo `K`.
    pub fn representative(&self, n: &BigUint) -> BigUint {
        representative(n, self.threshold(), self.period())
    }
}

pub fn representative(n: &BigUint, threshold: &BigUint, period: &BigUint) -> BigUint {
    if n <= threshold {
        n.clone()
    } else {
        let base = threshold + 1u32;
        (n - &base).mod_floor(period) + base
    }
}

pub fn period_params(ocp: &Ocp, phi: &Ctl) -> PeriodParameters {
    let k = ocp.num_locations();
    let lcm = lcm_upto(k as u64).expect("an OCP has at least one location");
    let dag = CoreDag::new(phi);
    let two_k2 = BigUint::from(2 * k * k);
    let mut entries: Vec<PeriodEntry> = Vec::with_capacity(dag.nodes().len());
    for (i, node) in dag.nodes().iter().enumerate() {
        let lud = dag.lud(i);
        let period = lcm.pow(lud);
        let (threshold, size) = match node {
            Node::Atom(_) | Node::True | Node::False => (BigUint::zero(), 1),
            Node::Not(a) => (entries[*a].threshold.clone(), entries[*a].size + 1),
            Node::And(a, b) => (
                (&entries[*a].threshold).max(&entries[*b].threshold).clone(),
                entries[*a].size + entries[*b].size + 1,
            ),
            Node::Ex(a) => (
                &entries[*a].threshold + &entries[*a].period,
                entries[*a].size + 1,
            ),
            Node::Eu(a, b) | Node::Ew(a, b) => (
                (&entries[*a].threshold).max(&entries[*b].threshold) + &two_k2 * &period,
                entries[*a].size + entries[*b].size + 1,
            ),
        };
        entries.push(PeriodEntry {
            period,
            threshold,
            size,
            lud,
        });
    }
    PeriodParameters {
        k,
        lcm,
        dag,
        entries,
    }
}

/// A finite window `Q x [0, top]` of the configuration graph. State `s`
/// encodes `(s % nloc, s / nloc)`.
struct Space<'a> {
    ocp: &'a Ocp,
    nloc: usize,
    top: usize,
    /// Counter that an increment out of the window is redirected to; `None`
    /// means such moves leave the window.
    wrap_to: Option<usize>,
    rev_zero: Vec<Vec<(i8, usize)>>,
    rev_pos: Vec<Vec<(i8, usize)>>,
}

enum Succ {
    Inside(usize),
    Outside(usize),
}

impl<'a> Space<'a> {
    fn new(ocp: &'a Ocp, top: usize, wrap_to: Option<usize>) -> Self {
        let nloc = ocp.num_locations();
        let mut rev_zero = vec![Vec::new(); nloc];
        let mut rev_pos = vec![Vec::new(); nloc];
        for (side, rev) in [(Side::Zero, &mut rev_zero), (Side::Positive, &mut rev_pos)] {
            for t in ocp.transitions(side) {
                rev[t.dst.index()].push((t.delta, t.src.index()));
            }
        }
        Space {
            ocp,
            nloc,
            top,
            wrap_to,
            rev_zero,
            rev_pos,
        }
    }

    fn len(&self) -> usize {
        self.nloc * (self.top + 1)
    }

    fn state(&self, q: usize, n: usize) -> usize {
        n * self.nloc + q
    }

    fn empty(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.len())
    }

    fn full(&self) -> FixedBitSet {
        let mut s = self.empty();
        s.insert_range(..);
        s
    }

    fn for_each_succ(&self, s: usize, mut f: impl FnMut(Succ)) {
        let (q, n) = (s % self.nloc, s / self.nloc);
        let side = if n == 0 { Side::Zero } else { Side::Positive };
        for &(delta, dst) in self.ocp.outgoing(side, LocId(q as u32)) {
            let m = (n as isize + delta as isize) as usize;
            if m <= self.top {
                f(Succ::Inside(self.state(dst.index(), m)));
            } else if let Some(w) = self.wrap_to {
                f(Succ::Inside(self.state(dst.index(), w)));
            } else {
                f(Succ::Outside(dst.index()));
            }
        }
    }

    /// Inside predecessors, with the same multiplicity as the corresponding
    /// inside successor edges.
    fn for_each_pred(&self, s: usize, mut f: impl FnMut(usize)) {
        let (q, m) = (s % self.nloc, s / self.nloc);
        for &(delta, src) in &self.rev_pos[q] {
            let n = m as isize - delta as isize;
            if n >= 1 && n as usize <= self.top {
                f(self.state(src, n as usize));
            }
        }
        if m <= 1 {
            for &(delta, src) in &self.rev_zero[q] {
                if m as isize - delta as isize == 0 {
                    f(self.state(src, 0));
                }
            }
        }
        if self.wrap_to == Some(m) {
            let side = if self.top == 0 { &self.rev_zero } else { &self.rev_pos };
            for &(delta, src) in &side[q] {
                if delta == 1 {
                    f(self.state(src, self.top));
                }
            }
        }
    }

    /// States at the top counter, the only ones that can leave the window.
    fn top_states(&self) -> std::ops::Range<usize> {
        self.state(0, self.top)..self.len()
    }

    fn labelled(&self, prop: &str) -> FixedBitSet {
        let mut out = self.empty();
        if let Some(locs) = self.ocp.label_set(prop) {
            for n in 0..=self.top {
                for q in locs.ones() {
                    out.insert(self.state(q, n));
                }
            }
        }
        out
    }

    /// Locations satisfying `prop`, for the configurations above the window.
    fn labelled_locs(&self, prop: &str) -> FixedBitSet {
        self.ocp
            .label_set(prop)
            .cloned()
            .unwrap_or_else(|| FixedBitSet::with_capacity(self.nloc))
    }

    fn has_escape_into(&self, s: usize, esc: &FixedBitSet) -> bool {
        let mut hit = false;
        self.for_each_succ(s, |t| {
            if let Succ::Outside(q) = t {
                hit |= esc.contains(q);
            }
        });
        hit
    }

    /// States with a successor in `z`, or a move out of the window into a
    /// location of `esc`.
    fn pre_exists(&self, z: &FixedBitSet, esc: Option<&FixedBitSet>) -> FixedBitSet {
        let mut out = self.empty();
        for s in z.ones() {
            self.for_each_pred(s, |p| out.insert(p));
        }
        if let Some(esc) = esc {
            for s in self.top_states() {
                if self.has_escape_into(s, esc) {
                    out.insert(s);
                }
            }
        }
        out
    }

    /// Least fixpoint of `Z = b | (a & (pre(Z) | escape into esc))`.
    fn least_until(
        &self,
        a: &FixedBitSet,
        b: &FixedBitSet,
        esc: Option<&FixedBitSet>,
    ) -> FixedBitSet {
        let mut z = b.clone();
        let mut stack: Vec<usize> = b.ones().collect();
        if let Some(esc) = esc {
            for s in self.top_states() {
                if a.contains(s) && !z.contains(s) && self.has_escape_into(s, esc) {
                    z.insert(s);
                    stack.push(s);
                }
            }
        }
        while let Some(s) = stack.pop() {
            self.for_each_pred(s, |p| {
                if a.contains(p) && !z.contains(p) {
                    z.insert(p);
                    stack.push(p);
                }
            });
        }
        z
    }

    /// Greatest fixpoint of `Z = a & (pre(Z) | escape into esc)`.
    fn greatest_globally(&self, a: &FixedBitSet, esc: Option<&FixedBitSet>) -> FixedBitSet {
        let mut z = a.clone();
        let mut count = vec![0u32; self.len()];
        let mut anchored = self.empty();
        let mut stack = Vec::new();
        for s in a.ones() {
            let mut c = 0;
            let mut anchor = false;
            self.for_each_succ(s, |t| match t {
                Succ::Inside(t) => c += u32::from(a.contains(t)),
                Succ::Outside(q) => anchor |= esc.is_some_and(|e| e.contains(q)),
            });
            count[s] = c;
            if anchor {
                anchored.insert(s);
            } else if c == 0 {
                stack.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            z.set(s, false);
            self.for_each_pred(s, |p| {
                if z.contains(p) && !anchored.contains(p) {
                    count[p] -= 1;
                    if count[p] == 0 {
                        stack.push(p);
                    }
                }
            });
        }
        z
    }
}

fn complement(s: &FixedBitSet) -> FixedBitSet {
    let mut out = s.clone();
    out.toggle_range(..);
    out
}

fn and(a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
    let mut out = a.clone();
    out.intersect_with(b);
    out
}

fn or(a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
    let mut out = a.clone();
    out.union_with(b);
    out
}

/// Two-valued evaluation of every DAG node on the window, with moves out of
/// the window either wrapped or dropped.
fn evaluate_sets(space: &Space, dag: &CoreDag) -> Vec<FixedBitSet> {
    let mut sets: Vec<FixedBitSet> = Vec::with_capacity(dag.nodes().len());
    for node in dag.nodes() {
        let set = match node {
            Node::Atom(p) => space.labelled(p),
            Node::True => space.full(),
            Node::False => space.empty(),
            Node::Not(a) => complement(&sets[*a]),
            Node::And(a, b) => and(&sets[*a], &sets[*b]),
            Node::Ex(a) => space.pre_exists(&sets[*a], None),
            Node::Eu(a, b) => space.least_until(&sets[*a], &sets[*b], None),
            Node::Ew(a, b) => {
                let until = space.least_until(&sets[*a], &sets[*b], None);
                or(&until, &space.greatest_globally(&sets[*a], None))
            }
        };
        sets.push(set);
    }
    sets
}

/// Satisfaction sets of every core subformula on a finite counter window.
#[derive(Debug, Clone)]
pub struct SatTable {
    nloc: usize,
    top: usize,
    sets: Vec<FixedBitSet>,
}

impl SatTable {
    /// Largest counter value in the table.
    pub fn top(&self) -> usize {
        self.top
    }

    pub fn num_locations(&self) -> usize {
        self.nloc
    }

    pub fn root(&self) -> &FixedBitSet {
        self.sets.last().expect("a formula has at least one node")
    }

    /// The satisfaction set of DAG node `i`, indexed by `n * |Q| + q`.
    pub fn node(&self, i: usize) -> &FixedBitSet {
        &self.sets[i]
    }

    /// Whether the goal formula holds at `(q, n)`.
    ///
    /// # Panics
    /// If `n` exceeds [`SatTable::top`].
    pub fn holds(&self, q: LocId, n: usize) -> bool {
        assert!(n <= self.top, "counter {n} outside table range");
        self.root().contains(n * self.nloc + q.index())
    }

    pub fn node_holds(&self, i: usize, q: LocId, n: usize) -> bool {
        self.sets[i].contains(n * self.nloc + q.index())
    }
}

/// Exact satisfaction table on the wrapped window.
#[derive(Debug, Clone)]
pub struct PeriodicTable {
    params: PeriodParameters,
    table: SatTable,
}

impl PeriodicTable {
    pub fn params(&self) -> &PeriodParameters {
        &self.params
    }

    pub fn table(&self) -> &SatTable {
        &self.table
    }

    pub fn holds(&self, q: LocId, n: &BigUint) -> bool {
        let m = self.params.representative(n);
        self.table.holds(q, m.to_usize().expect("representative lies in the table"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Largest admissible wrapped window, in configurations.
    pub budget: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            budget: DEFAULT_BUDGET,
        }
    }
}

pub fn evaluate_periodic(ocp: &Ocp, phi: &Ctl) -> Result<PeriodicTable, CheckError> {
    evaluate_periodic_with(ocp, phi, &CheckOptions::default())
}

pub fn evaluate_periodic_with(
    ocp: &Ocp,
    phi: &Ctl,
    opts: &CheckOptions,
) -> Result<PeriodicTable, CheckError> {
    let params = period_params(ocp, phi);
    let domain = params.domain_size();
    if domain > BigUint::from(opts.budget) {
        return Err(CheckError::Infeasible {
            domain,
            budget: opts.budget,
        });
    }
    let t = params.threshold().to_usize().expect("bounded by budget");
    let k = params.period().to_usize().expect("bounded by budget");
    let space = Space::new(ocp, t + k, Some(t + 1));
    let sets = evaluate_sets(&space, params.dag());
    Ok(PeriodicTable {
        table: SatTable {
            nloc: space.nloc,
            top: space.top,
            sets,
        },
        params,
    })
}

/// Decides `(q, n) |= phi` for an arbitrary counter value.
pub fn check(ocp: &Ocp, phi: &Ctl, q: LocId, n: &BigUint) -> Result<bool, CheckError> {
    check_with(ocp, phi, q, n, &CheckOptions::default())
}

pub fn check_with(
    ocp: &Ocp,
    phi: &Ctl,
    q: LocId,
    n: &BigUint,
    opts: &CheckOptions,
) -> Result<bool, CheckError> {
    if q.index() >= ocp.num_locations() {
        return Err(OcpError::BadLocationId(q.index()).into());
    }
    Ok(evaluate_periodic_with(ocp, phi, opts)?.holds(q, n))
}

/// Evaluation on `Q x [0, bound]` with every move above `bound` deleted.
pub fn evaluate_capped(ocp: &Ocp, phi: &Ctl, bound: usize) -> SatTable {
    evaluate_capped_dag(ocp, &CoreDag::new(phi), bound)
}

fn evaluate_capped_dag(ocp: &Ocp, dag: &CoreDag, bound: usize) -> SatTable {
    let space = Space::new(ocp, bound, None);
    SatTable {
        nloc: space.nloc,
        top: bound,
        sets: evaluate_sets(&space, dag),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThreeValued {
    True,
    False,
    Unknown,
}

impl ThreeValued {
    pub fn from_bounds(lower: bool, upper: bool) -> ThreeValued {
        match (lower, upper) {
            (true, _) => ThreeValued::True,
            (false, false) => ThreeValued::False,
            (false, true) => ThreeValued::Unknown,
        }
    }

    pub fn definite(self) -> Option<bool> {
        match self {
            ThreeValued::True => Some(true),
            ThreeValued::False => Some(false),
            ThreeValued::Unknown => None,
        }
    }
}

impl fmt::Display for ThreeValued {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThreeValued::True => "true",
            ThreeValued::False => "false",
            ThreeValued::Unknown => "unknown",
        })
    }
}

/// Kleene evaluation on `Q x [0, bound]`. Each node is represented by the set
/// of states where it is definitely true (`lower`) and where it may be true
/// (`upper`).
#[derive(Debug, Clone)]
pub struct TvTable {
    nloc: usize,
    top: usize,
    lower: Vec<FixedBitSet>,
    upper: Vec<FixedBitSet>,
}

impl TvTable {
    pub fn top(&self) -> usize {
        self.top
    }

    pub fn value(&self, q: LocId, n: usize) -> ThreeValued {
        self.node_value(self.lower.len() - 1, q, n)
    }

    pub fn node_value(&self, i: usize, q: LocId, n: usize) -> ThreeValued {
        assert!(n <= self.top, "counter {n} outside table range");
        let s = n * self.nloc + q.index();
        ThreeValued::from_bounds(self.lower[i].contains(s), self.upper[i].contains(s))
    }
}

pub fn evaluate_three_valued(ocp: &Ocp, phi: &Ctl, bound: usize) -> TvTable {
    evaluate_three_valued_dag(ocp, &CoreDag::new(phi), bound)
}

fn evaluate_three_valued_dag(ocp: &Ocp, dag: &CoreDag, bound: usize) -> TvTable {
    let space = Space::new(ocp, bound, None);
    let nloc = space.nloc;
    let no_locs = FixedBitSet::with_capacity(nloc);
    let mut all_locs = no_locs.clone();
    all_locs.insert_range(..);
    let mut lower: Vec<FixedBitSet> = Vec::new();
    let mut upper: Vec<FixedBitSet> = Vec::new();
    // Bounds of each node at the configurations (q, bound + 1), per location.
    let mut out_lower: Vec<FixedBitSet> = Vec::new();
    let mut out_upper: Vec<FixedBitSet> = Vec::new();
    for node in dag.nodes() {
        let (lo, up, olo, oup) = match node {
            Node::Atom(p) => {
                let s = space.labelled(p);
                let o = space.labelled_locs(p);
                (s.clone(), s, o.clone(), o)
            }
            Node::True => (space.full(), space.full(), all_locs.clone(), all_locs.clone()),
            Node::False => (space.empty(), space.empty(), no_locs.clone(), no_locs.clone()),
            Node::Not(a) => (
                complement(&upper[*a]),
                complement(&lower[*a]),
                complement(&out_upper[*a]),
                complement(&out_lower[*a]),
            ),
            Node::And(a, b) => (
                and(&lower[*a], &lower[*b]),
                and(&upper[*a], &upper[*b]),
                and(&out_lower[*a], &out_lower[*b]),
                and(&out_upper[*a], &out_upper[*b]),
            ),
            Node::Ex(a) => (
                space.pre_exists(&lower[*a], Some(&out_lower[*a])),
                space.pre_exists(&upper[*a], Some(&out_upper[*a])),
                no_locs.clone(),
                all_locs.clone(),
            ),
            Node::Eu(a, b) => {
                let olo = out_lower[*b].clone();
                let oup = or(&out_upper[*a], &out_upper[*b]);
                (
                    space.least_until(&lower[*a], &lower[*b], Some(&olo)),
                    space.least_until(&upper[*a], &upper[*b], Some(&oup)),
                    olo,
                    oup,
                )
            }
            Node::Ew(a, b) => {
                let olo = out_lower[*b].clone();
                let oup = or(&out_upper[*a], &out_upper[*b]);
                let lo = or(
                    &space.least_until(&lower[*a], &lower[*b], Some(&olo)),
                    &space.greatest_globally(&lower[*a], Some(&olo)),
                );
                let up = or(
                    &space.least_until(&upper[*a], &upper[*b], Some(&oup)),
                    &space.greatest_globally(&upper[*a], Some(&oup)),
                );
                (lo, up, olo, oup)
            }
        };
        lower.push(lo);
        upper.push(up);
        out_lower.push(olo);
        out_upper.push(oup);
    }
    TvTable {
        nloc,
        top: bound,
        lower,
        upper,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleVerdict {
    True,
    False,
    Indeterminate,
}

impl OracleVerdict {
    pub fn from_bool(b: bool) -> OracleVerdict {
        if b {
            OracleVerdict::True
        } else {
            OracleVerdict::False
        }
    }

    pub fn definite(self) -> Option<bool> {
        match self {
            OracleVerdict::True => Some(true),
            OracleVerdict::False => Some(false),
            OracleVerdict::Indeterminate => None,
        }
    }
}

impl fmt::Display for OracleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleVerdict::True => "true",
            OracleVerdict::False => "false",
            OracleVerdict::Indeterminate => "indeterminate",
        })
    }
}

/// How an oracle verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSource {
    /// Definite three-valued answer at this bound.
    ThreeValued(usize),
    /// Agreement of the capped evaluations at these two bounds.
    CappedAgreement(usize, usize),
    /// Capped evaluations disagreed (or the counter was above every bound).
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub verdict: OracleVerdict,
    pub source: OracleSource,
    /// Three-valued bounds tried, in order.
    pub bounds: Vec<usize>,
}

/// Escalating bounded evaluation of one formula, caching tables per bound.
#[derive(Debug, Clone)]
pub struct BoundedOracle<'a> {
    ocp: &'a Ocp,
    dag: CoreDag,
    bounds: Vec<usize>,
    tv: BTreeMap<usize, TvTable>,
    capped: BTreeMap<usize, SatTable>,
}

impl<'a> BoundedOracle<'a> {
    /// Bounds `b0, 2 b0, 4 b0`.
    pub fn new(ocp: &'a Ocp, phi: &Ctl, b0: usize) -> Self {
        Self::with_rounds(ocp, phi, b0, 3)
    }

    /// Bounds `b0, 2 b0, ..., 2^(rounds-1) b0`; `rounds` is at least 2.
    pub fn with_rounds(ocp: &'a Ocp, phi: &Ctl, b0: usize, rounds: u32) -> Self {
        let rounds = rounds.max(2);
        BoundedOracle {
            ocp,
            dag: CoreDag::new(phi),
            bounds: (0..rounds).map(|i| b0.max(1) << i).collect(),
            tv: BTreeMap::new(),
            capped: BTreeMap::new(),
        }
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn three_valued(&mut self, bound: usize) -> &TvTable {
        let (ocp, dag) = (self.ocp, &self.dag);
        self.tv
            .entry(bound)
            .or_insert_with(|| evaluate_three_valued_dag(ocp, dag, bound))
    }

    pub fn capped(&mut self, bound: usize) -> &SatTable {
        let (ocp, dag) = (self.ocp, &self.dag);
        self.capped
            .entry(bound)
            .or_insert_with(|| evaluate_capped_dag(ocp, dag, bound))
    }

    pub fn query(&mut self, q: LocId, n: usize) -> OracleOutcome {
        let mut tried = Vec::new();
        for b in self.bounds.clone() {
            if n > b {
                continue;
            }
            tried.push(b);
            if let Some(v) = self.three_valued(b).value(q, n).definite() {
                return OracleOutcome {
                    verdict: OracleVerdict::from_bool(v),
                    source: OracleSource::ThreeValued(b),
                    bounds: tried,
                };
            }
        }
        let (b1, b2) = (
            self.bounds[self.bounds.len() - 2],
            self.bounds[self.bounds.len() - 1],
        );
        if n <= b1 {
            let v1 = self.capped(b1).holds(q, n);
            let v2 = self.capped(b2).holds(q, n);
            if v1 == v2 {
                return OracleOutcome {
                    verdict: OracleVerdict::from_bool(v1),
                    source: OracleSource::CappedAgreement(b1, b2),
                    bounds: tried,
                };
            }
        }
        OracleOutcome {
            verdict: OracleVerdict::Indeterminate,
            source: OracleSource::Unresolved,
            bounds: tried,
        }
    }
}

/// Escalating bounded check: three-valued at `b0, 2 b0, 4 b0`, then agreement
/// of the capped evaluations at the two largest bounds.
pub fn oracle_check(ocp: &Ocp, phi: &Ctl, q: LocId, n: &BigUint, b0: usize) -> OracleVerdict {
    oracle_check_outcome(ocp, phi, q, n, b0).verdict
}

pub fn oracle_check_outcome(
    ocp: &Ocp,
    phi: &Ctl,
    q: LocId,
    n: &BigUint,
    b0: usize,
) -> OracleOutcome {
    let mut oracle = BoundedOracle::new(ocp, phi, b0);
    match n.to_usize() {
        Some(n) if n <= *oracle.bounds().last().unwrap() => oracle.query(q, n),
        _ => OracleOutcome {
            verdict: OracleVerdict::Indeterminate,
            source: OracleSource::Unresolved,
            bounds: Vec::new(),
        },
    }
}

/// Capped evaluation at `bound` and `2 * bound`; the verdict is returned only
/// if both agree.
pub fn capped_stable(ocp: &Ocp, phi: &Ctl, q: LocId, n: usize, bound: usize) -> OracleVerdict {
    let dag = CoreDag::new(phi);
    let a = evaluate_capped_dag(ocp, &dag, bound).holds(q, n);
    let b = evaluate_capped_dag(ocp, &dag, 2 * bound).holds(q, n);
    if a == b {
        OracleVerdict::from_bool(a)
    } else {
        OracleVerdict::Indeterminate
    }
}

impl From<bool> for OracleVerdict {
    fn from(b: bool) -> Self {
        OracleVerdict::from_bool(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::parse;
    use crate::ocp::OcpBuilder;

    fn two_loc() -> Ocp {
        let mut b = OcpBuilder::new();
        let a = b.location("a");
        let c = b.location("b");
        b.zero(a, 0, c).unwrap();
        b.pos(a, -1, a).unwrap();
        b.pos(a, 0, c).unwrap();
        b.label("p_b", c);
        b.build().unwrap()
    }

    /// Counter goes up forever at `u`, counts down at `d`.
    fn climber() -> Ocp {
        let mut b = OcpBuilder::new();
        let u = b.location("u");
        let d = b.location("d");
        b.both(u, 1, u).unwrap();
        b.both(u, 0, d).unwrap();
        b.pos(d, -1, d).unwrap();
        b.label("down", d);
        b.build().unwrap()
    }

    #[test]
    fn period_parameter_examples() {
        let o = two_loc();
        let p = period_params(&o, &parse("E[p U q]").unwrap());
        assert_eq!(p.period(), &BigUint::from(2u32));
        assert_eq!(p.threshold(), &BigUint::from(16u32));
        let mut b = OcpBuilder::new();
        b.location("x");
        let one = b.build().unwrap();
        let p = period_params(&one, &parse("EX p").unwrap());
        assert_eq!((p.period(), p.threshold()), (&1u32.into(), &1u32.into()));
        let p = period_params(&o, &parse("p").unwrap());
        assert_eq!((p.period(), p.threshold()), (&1u32.into(), &0u32.into()));
    }

    #[test]
    fn representative_examples() {
        let t = BigUint::from(16u32);
        let k = BigUint::from(2u32);
        let n = BigUint::from(10u32).pow(9);
        assert_eq!(representative(&n, &t, &k), 18u32.into());
        assert_eq!(representative(&10u32.into(), &t, &k), 10u32.into());
        assert_eq!(representative(&18u32.into(), &t, &k), 18u32.into());
        assert_eq!(representative(&17u32.into(), &t, &k), 17u32.into());
    }

    #[test]
    fn reachability_through_countdown() {
        let o = two_loc();
        let table = evaluate_periodic(&o, &parse("EF p_b").unwrap()).unwrap();
        let a = o.loc("a").unwrap();
        for n in 0..=table.table().top() {
            assert!(table.table().holds(a, n));
        }
        assert!(table.holds(a, &BigUint::from(10u32).pow(30)));
        let f = evaluate_periodic(&o, &Ctl::False).unwrap();
        assert!(f.table().root().is_clear());
    }

    #[test]
    fn deadlocks_have_no_successors() {
        let o = two_loc();
        let b = o.loc("b").unwrap();
        assert!(!check(&o, &parse("EX true").unwrap(), b, &3u32.into()).unwrap());
        assert!(check(&o, &parse("AX false").unwrap(), b, &3u32.into()).unwrap());
        // Deadlocked states have no infinite paths.
        assert!(!check(&o, &parse("EG true").unwrap(), b, &0u32.into()).unwrap());
    }

    #[test]
    fn infinite_climb_is_a_path() {
        let o = climber();
        let u = o.loc("u").unwrap();
        let d = o.loc("d").unwrap();
        let eg = parse("EG ~down").unwrap();
        assert!(check(&o, &eg, u, &5u32.into()).unwrap());
        assert!(!check(&o, &eg, d, &5u32.into()).unwrap());
        // Capped evaluation loses the climbing path.
        assert!(!evaluate_capped(&o, &eg, 10).holds(u, 3));
        assert_eq!(evaluate_three_valued(&o, &eg, 10).value(u, 3), ThreeValued::Unknown);
        // (d, n) reaches (d, 0), a deadlock, exactly n steps later.
        let ex3 = parse("EX EX EX ~EX true").unwrap();
        assert!(check(&o, &ex3, d, &3u32.into()).unwrap());
        assert!(!check(&o, &ex3, d, &4u32.into()).unwrap());
    }

    #[test]
    fn three_valued_is_definite_when_witness_is_inside() {
        let o = climber();
        let u = o.loc("u").unwrap();
        let tv = evaluate_three_valued(&o, &parse("EF down").unwrap(), 4);
        assert_eq!(tv.value(u, 4), ThreeValued::True);
        let tv = evaluate_three_valued(&o, &parse("down & EX true").unwrap(), 4);
        assert_eq!(tv.value(u, 4), ThreeValued::False);
        let tv = evaluate_three_valued(&o, &parse("EX EX ~EX true").unwrap(), 4);
        assert_eq!(tv.value(u, 4), ThreeValued::Unknown);
        assert_eq!(tv.value(o.loc("d").unwrap(), 2), ThreeValued::True);
    }

    #[test]
    fn budget_guard() {
        let o = two_loc();
        let opts = CheckOptions { budget: 10 };
        match evaluate_periodic_with(&o, &parse("E[p U q]").unwrap(), &opts) {
            Err(CheckError::Infeasible { domain, budget: 10 }) => {
                assert_eq!(domain, BigUint::from(2u32 * 19))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oracle_escalates() {
        let o = climber();
        let u = o.loc("u").unwrap();
        let out = oracle_check_outcome(&o, &parse("EF down").unwrap(), u, &3u32.into(), 4);
        assert_eq!(out.verdict, OracleVerdict::True);
        assert_eq!(out.source, OracleSource::ThreeValued(4));
        let out = oracle_check_outcome(&o, &parse("EG ~down").unwrap(), u, &3u32.into(), 4);
        assert_eq!(out.verdict, OracleVerdict::False);
        assert_eq!(out.source, OracleSource::CappedAgreement(8, 16));
        assert_eq!(out.bounds, vec![4, 8, 16]);
    }
}
