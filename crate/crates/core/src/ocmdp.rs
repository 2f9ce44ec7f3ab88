//! One-counter Markov decision processes.
//!
//! An OC-MDP is an OCP whose locations are split into nondeterministic and
//! probabilistic ones; a probabilistic location carries a distribution over
//! its outgoing zero transitions and one over its positive transitions.
//! Analyses run on the finite MDP induced by counters `0..=B`, where moves
//! above `B` enter a sink that counts as reached (optimistic) or as lost
//! (pessimistic). Exact values are rationals.
//!
//! ```text
//! ocmdp
//! nloc a b
//! ploc c
//! zero c 0 a 1/2
//! zero c +1 b 1/2
//! pos a -1 a
//! target a
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::gadgets::formula::{eliminate_negations, CrrFormula, Formula};
use crate::gadgets::GadgetError;
use crate::nfa::{Nfa, NfaBuilder};
use crate::ocp::{LocId, Ocp, OcpBuilder, OcpError, Side};
use crate::text::{content_lines, header, parse_int};

pub const DEFAULT_VERTEX_BUDGET: usize = 100_000;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("probabilistic location `{0}` has a transition without probability")]
    MissingProbability(String),
    #[error("nondeterministic location `{0}` has a transition with a probability")]
    UnexpectedProbability(String),
    #[error("probability {p} on a transition of `{loc}` is not in (0, 1]")]
    BadProbability { loc: String, p: BigRational },
    #[error("{side:?} distribution of `{loc}` sums to {sum}")]
    BadDistribution {
        loc: String,
        side: Side,
        sum: BigRational,
    },
    #[error("`{loc}` has no {side:?} transition")]
    IllFormed { loc: String, side: Side },
    #[error("start counter {start} exceeds the bound {bound}")]
    StartAboveBound { start: usize, bound: usize },
    #[error("{vertices} vertices exceed the budget of {budget}")]
    BudgetExceeded { vertices: usize, budget: usize },
    #[error("NFA shape: {0}")]
    NfaShape(String),
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

fn side_ix(side: Side) -> usize {
    match side {
        Side::Zero => 0,
        Side::Positive => 1,
    }
}

const SIDES: [Side; 2] = [Side::Zero, Side::Positive];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcMdp {
    ocp: Ocp,
    probabilistic: FixedBitSet,
    /// Per side and location, aligned with `ocp.outgoing(side, q)`; empty
    /// for nondeterministic locations.
    probs: [Vec<Vec<BigRational>>; 2],
}

impl OcMdp {
    pub fn ocp(&self) -> &Ocp {
        &self.ocp
    }

    pub fn is_probabilistic(&self, q: LocId) -> bool {
        self.probabilistic.contains(q.index())
    }

    /// Probabilities of `ocp().outgoing(side, q)`, or an empty slice for a
    /// nondeterministic location.
    pub fn probabilities(&self, side: Side, q: LocId) -> &[BigRational] {
        &self.probs[side_ix(side)][q.index()]
    }

    /// Locations and sides without an outgoing transition.
    pub fn missing_sides(&self) -> Vec<(LocId, Side)> {
        self.ocp
            .locations()
            .flat_map(|q| SIDES.map(|s| (q, s)))
            .filter(|&(q, s)| self.ocp.outgoing(s, q).is_empty())
            .collect()
    }

    pub fn is_wellformed(&self) -> bool {
        self.missing_sides().is_empty()
    }

    pub fn to_builder(&self) -> OcMdpBuilder {
        let mut b = OcMdpBuilder::new();
        b.embed("", self);
        b
    }
}

#[derive(Debug, Clone, Default)]
pub struct OcMdpBuilder {
    ocp: OcpBuilder,
    probabilistic: BTreeSet<LocId>,
    probs: BTreeMap<(Side, LocId, i8, LocId), BigRational>,
}

impl OcMdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Gets or creates a nondeterministic location.
    pub fn nondet(&mut self, name: &str) -> LocId {
        self.ocp.location(name)
    }

    /// Gets or creates a location and marks it probabilistic.
    pub fn prob(&mut self, name: &str) -> LocId {
        let q = self.ocp.location(name);
        self.probabilistic.insert(q);
        q
    }

    pub fn lookup(&self, name: &str) -> Option<LocId> {
        self.ocp.lookup(name)
    }

    pub fn add(
        &mut self,
        side: Side,
        src: LocId,
        delta: i64,
        dst: LocId,
        p: Option<BigRational>,
    ) -> Result<&mut Self, MdpError> {
        match side {
            Side::Zero => self.ocp.zero(src, delta, dst)?,
            Side::Positive => self.ocp.pos(src, delta, dst)?,
        };
        if let Some(p) = p {
            self.probs.insert((side, src, delta as i8, dst), p);
        }
        Ok(self)
    }

    pub fn zero(
        &mut self,
        src: LocId,
        delta: i64,
        dst: LocId,
        p: Option<BigRational>,
    ) -> Result<&mut Self, MdpError> {
        self.add(Side::Zero, src, delta, dst, p)
    }

    pub fn pos(
        &mut self,
        src: LocId,
        delta: i64,
        dst: LocId,
        p: Option<BigRational>,
    ) -> Result<&mut Self, MdpError> {
        self.add(Side::Positive, src, delta, dst, p)
    }

    pub fn both(
        &mut self,
        src: LocId,
        delta: i64,
        dst: LocId,
        p: Option<BigRational>,
    ) -> Result<&mut Self, MdpError> {
        self.add(Side::Zero, src, delta, dst, p.clone())?;
        self.add(Side::Positive, src, delta, dst, p)
    }

    /// Copies `other` with location names prefixed; returns the new ids.
    pub fn embed(&mut self, prefix: &str, other: &OcMdp) -> Vec<LocId> {
        let map = self.ocp.embed(prefix, &other.ocp);
        for q in other.ocp.locations() {
            if !other.is_probabilistic(q) {
                continue;
            }
            self.probabilistic.insert(map[q.index()]);
            for side in SIDES {
                let outs = other.ocp.outgoing(side, q);
                for (&(d, t), p) in outs.iter().zip(other.probabilities(side, q)) {
                    self.probs
                        .insert((side, map[q.index()], d, map[t.index()]), p.clone());
                }
            }
        }
        map
    }

    pub fn build(self) -> Result<OcMdp, MdpError> {
        let ocp = self.ocp.build()?;
        let n = ocp.num_locations();
        let mut probabilistic = FixedBitSet::with_capacity(n);
        for q in &self.probabilistic {
            probabilistic.insert(q.index());
        }
        let mut probs: [Vec<Vec<BigRational>>; 2] = [vec![Vec::new(); n], vec![Vec::new(); n]];
        for (_, src, _, _) in self.probs.keys() {
            if !probabilistic.contains(src.index()) {
                return Err(MdpError::UnexpectedProbability(ocp.name(*src).into()));
            }
        }
        for q in ocp.locations() {
            if !probabilistic.contains(q.index()) {
                continue;
            }
            for side in SIDES {
                let mut sum = BigRational::zero();
                let mut row = Vec::new();
                for &(d, t) in ocp.outgoing(side, q) {
                    let p = self
                        .probs
                        .get(&(side, q, d, t))
                        .ok_or_else(|| MdpError::MissingProbability(ocp.name(q).into()))?;
                    if !p.is_positive() || p > &BigRational::one() {
                        return Err(MdpError::BadProbability {
                            loc: ocp.name(q).into(),
                            p: p.clone(),
                        });
                    }
                    sum += p;
                    row.push(p.clone());
                }
                if !row.is_empty() && !sum.is_one() {
                    return Err(MdpError::BadDistribution {
                        loc: ocp.name(q).into(),
                        side,
                        sum,
                    });
                }
                probs[side_ix(side)][q.index()] = row;
            }
        }
        Ok(OcMdp {
            ocp,
            probabilistic,
            probs,
        })
    }
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

/// Adds a `(q, 0, q)` loop on every side without transitions (probability 1
/// on probabilistic locations). Returns the result and the additions.
pub fn complete_wellformed(a: &OcMdp) -> (OcMdp, Vec<(LocId, Side)>) {
    let missing = a.missing_sides();
    if missing.is_empty() {
        return (a.clone(), missing);
    }
    let mut b = a.to_builder();
    for &(q, side) in &missing {
        let p = a.is_probabilistic(q).then(BigRational::one);
        b.add(side, q, 0, q, p).expect("zero delta is valid on both sides");
    }
    (b.build().expect("completion keeps distributions valid"), missing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frontier {
    /// Moves above the bound count as reaching the target.
    Optimistic,
    /// Moves above the bound count as never reaching it.
    Pessimistic,
}

/// The MDP induced on configurations with counter at most `bound` that are
/// reachable from the start, plus a sink for moves above the bound.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    states: Vec<(LocId, usize)>,
    index: HashMap<(LocId, usize), usize>,
    probabilistic: FixedBitSet,
    succ: Vec<Vec<usize>>,
    /// Aligned with `succ` on probabilistic vertices, empty otherwise.
    prob: Vec<Vec<BigRational>>,
    sink: usize,
    frontier: Frontier,
    bound: usize,
}

impl FiniteMdp {
    /// Number of vertices including the sink.
    pub fn num_vertices(&self) -> usize {
        self.succ.len()
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn frontier(&self) -> Frontier {
        self.frontier
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn vertex(&self, q: LocId, n: usize) -> Option<usize> {
        self.index.get(&(q, n)).copied()
    }

    /// The configuration of a vertex; `None` for the sink.
    pub fn configuration(&self, v: usize) -> Option<(LocId, usize)> {
        self.states.get(v).copied()
    }

    pub fn is_probabilistic(&self, v: usize) -> bool {
        self.probabilistic.contains(v)
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn probabilities(&self, v: usize) -> &[BigRational] {
        &self.prob[v]
    }

    pub fn sink_reachable(&self) -> bool {
        self.succ
            .iter()
            .enumerate()
            .any(|(v, s)| v != self.sink && s.contains(&self.sink))
    }

    /// `R x {0}`, plus the sink when optimistic.
    pub fn targets(&self, r: &[LocId]) -> FixedBitSet {
        let mut t = FixedBitSet::with_capacity(self.num_vertices());
        for &q in r {
            if let Some(v) = self.vertex(q, 0) {
                t.insert(v);
            }
        }
        if self.frontier == Frontier::Optimistic {
            t.insert(self.sink);
        }
        t
    }
}

pub fn induced_finite_mdp(
    a: &OcMdp,
    start: (LocId, usize),
    bound: usize,
    frontier: Frontier,
) -> Result<FiniteMdp, MdpError> {
    induced_finite_mdp_from(a, &[start], bound, frontier)
}

/// Like [`induced_finite_mdp`], keeping everything reachable from any of
/// the starts.
pub fn induced_finite_mdp_from(
    a: &OcMdp,
    starts: &[(LocId, usize)],
    bound: usize,
    frontier: Frontier,
) -> Result<FiniteMdp, MdpError> {
    if let Some(&(q, side)) = a.missing_sides().first() {
        return Err(MdpError::IllFormed {
            loc: a.ocp.name(q).into(),
            side,
        });
    }
    let mut states = Vec::new();
    let mut index = HashMap::new();
    for &(q, n) in starts {
        if n > bound {
            return Err(MdpError::StartAboveBound { start: n, bound });
        }
        if q.index() >= a.ocp.num_locations() {
            return Err(OcpError::BadLocationId(q.index()).into());
        }
        if let std::collections::hash_map::Entry::Vacant(e) = index.entry((q, n)) {
            e.insert(states.len());
            states.push((q, n));
        }
    }
    let mut edges: Vec<Vec<(Option<(LocId, usize)>, Option<BigRational>)>> = Vec::new();
    let mut queue: VecDeque<usize> = (0..states.len()).collect();
    while let Some(v) = queue.pop_front() {
        let (q, n) = states[v];
        let side = if n == 0 { Side::Zero } else { Side::Positive };
        let probs = a.probabilities(side, q);
        let mut out = Vec::new();
        for (j, &(d, t)) in a.ocp.outgoing(side, q).iter().enumerate() {
            let m = (n as i64 + d as i64) as usize;
            let p = probs.get(j).cloned();
            if m > bound {
                out.push((None, p));
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry((t, m)) {
                e.insert(states.len());
                states.push((t, m));
                queue.push_back(states.len() - 1);
            }
            out.push((Some((t, m)), p));
        }
        if edges.len() <= v {
            edges.resize(v + 1, Vec::new());
        }
        edges[v] = out;
    }
    let sink = states.len();
    let mut probabilistic = FixedBitSet::with_capacity(sink + 1);
    let mut succ = Vec::with_capacity(sink + 1);
    let mut prob = Vec::with_capacity(sink + 1);
    for (v, out) in edges.into_iter().enumerate() {
        let is_prob = a.is_probabilistic(states[v].0);
        probabilistic.set(v, is_prob);
        let mut merged: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (dst, p) in out {
            let u = dst.map_or(sink, |c| index[&c]);
            *merged.entry(u).or_insert_with(BigRational::zero) += p.unwrap_or_else(BigRational::one);
        }
        succ.push(merged.keys().copied().collect());
        prob.push(if is_prob {
            merged.into_values().collect()
        } else {
            Vec::new()
        });
    }
    succ.push(vec![sink]);
    prob.push(Vec::new());
    Ok(FiniteMdp {
        states,
        index,
        probabilistic,
        succ,
        prob,
        sink,
        frontier,
        bound,
    })
}

/// Vertices from which some strategy reaches `t` with probability 1. Uses
/// only the supports of the distributions.
pub fn almost_sure_reach(m: &FiniteMdp, t: &FixedBitSet) -> FixedBitSet {
    let n = m.num_vertices();
    let mut y = FixedBitSet::with_capacity(n);
    y.insert_range(..);
    loop {
        let mut x = t.clone();
        x.intersect_with(&y);
        loop {
            let mut changed = false;
            for v in y.ones() {
                if x.contains(v) {
                    continue;
                }
                let s = &m.succ[v];
                let ok = if m.is_probabilistic(v) {
                    s.iter().all(|&u| y.contains(u)) && s.iter().any(|&u| x.contains(u))
                } else {
                    s.iter().any(|&u| x.contains(u))
                };
                if ok {
                    x.insert(v);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if x == y {
            return y;
        }
        y = x;
    }
}

/// Exact maximal probabilities of reaching `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalValueTable {
    values: Vec<BigRational>,
}

impl RationalValueTable {
    pub fn value(&self, v: usize) -> &BigRational {
        &self.values[v]
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }
}

/// Vertices that reach `t` along edges accepted by `edge`.
fn backward_reach(m: &FiniteMdp, t: &FixedBitSet, edge: impl Fn(usize, usize) -> bool) -> FixedBitSet {
    let n = m.num_vertices();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        for &u in &m.succ[v] {
            if edge(v, u) {
                pred[u].push(v);
            }
        }
    }
    let mut seen = t.clone();
    let mut queue: VecDeque<usize> = t.ones().collect();
    while let Some(u) = queue.pop_front() {
        for &v in &pred[u] {
            if !seen.put(v) {
                queue.push_back(v);
            }
        }
    }
    seen
}

pub fn exact_max_reach_values(
    m: &FiniteMdp,
    t: &FixedBitSet,
) -> Result<RationalValueTable, MdpError> {
    exact_max_reach_values_with(m, t, DEFAULT_VERTEX_BUDGET)
}

/// Policy iteration over memoryless deterministic strategies. Each policy
/// is evaluated exactly by solving its linear system one strongly
/// connected component at a time.
pub fn exact_max_reach_values_with(
    m: &FiniteMdp,
    t: &FixedBitSet,
    budget: usize,
) -> Result<RationalValueTable, MdpError> {
    let n = m.num_vertices();
    if n > budget {
        return Err(MdpError::BudgetExceeded {
            vertices: n,
            budget,
        });
    }
    let reach = backward_reach(m, t, |_, _| true);
    // Initial policy: a successor on a shortest path to the target.
    let mut dist = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = t.ones().collect();
    for v in t.ones() {
        dist[v] = 0;
    }
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        for &u in &m.succ[v] {
            pred[u].push(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in &pred[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut policy: Vec<usize> = (0..n)
        .map(|v| {
            let s = &m.succ[v];
            (0..s.len()).min_by_key(|&j| dist[s[j]]).unwrap_or(0)
        })
        .collect();
    loop {
        let values = evaluate_policy(m, t, &reach, &policy);
        let mut changed = false;
        for v in 0..n {
            if m.is_probabilistic(v) || t.contains(v) || !reach.contains(v) {
                continue;
            }
            let s = &m.succ[v];
            let current = &values[s[policy[v]]];
            let (best, value) = s
                .iter()
                .enumerate()
                .map(|(j, &u)| (j, &values[u]))
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("well-formed vertices have successors");
            if value > current {
                policy[v] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok(RationalValueTable { values });
        }
    }
}

fn evaluate_policy(
    m: &FiniteMdp,
    t: &FixedBitSet,
    reach: &FixedBitSet,
    policy: &[usize],
) -> Vec<BigRational> {
    let n = m.num_vertices();
    let chosen = |v: usize, u: usize| m.is_probabilistic(v) || m.succ[v][policy[v]] == u;
    let live = backward_reach(m, t, |v, u| !t.contains(v) && chosen(v, u));
    let mut values = vec![BigRational::zero(); n];
    for v in t.ones() {
        values[v] = BigRational::one();
    }
    let unknown: Vec<usize> = (0..n)
        .filter(|&v| live.contains(v) && reach.contains(v) && !t.contains(v))
        .collect();
    // Edges of the policy inside the unknown part.
    let mut slot = vec![usize::MAX; n];
    let mut graph: DiGraph<usize, ()> = DiGraph::with_capacity(unknown.len(), unknown.len());
    for (i, &v) in unknown.iter().enumerate() {
        slot[v] = i;
        graph.add_node(v);
    }
    let row = |v: usize| -> Vec<(usize, BigRational)> {
        if m.is_probabilistic(v) {
            m.succ[v].iter().copied().zip(m.prob[v].iter().cloned()).collect()
        } else {
            vec![(m.succ[v][policy[v]], BigRational::one())]
        }
    };
    for &v in &unknown {
        for (u, _) in row(v) {
            if slot[u] != usize::MAX {
                graph.add_edge((slot[v] as u32).into(), (slot[u] as u32).into(), ());
            }
        }
    }
    // Components come in reverse topological order: successors first.
    for comp in tarjan_scc(&graph) {
        let members: Vec<usize> = comp.iter().map(|&ix| graph[ix]).collect();
        let local: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let k = members.len();
        let mut a = vec![vec![BigRational::zero(); k + 1]; k];
        for (i, &v) in members.iter().enumerate() {
            a[i][i] = BigRational::one();
            for (u, p) in row(v) {
                match local.get(&u) {
                    Some(&j) => a[i][j] -= p,
                    None => a[i][k] += p * &values[u],
                }
            }
        }
        for (v, x) in members.iter().zip(solve(a)) {
            values[*v] = x;
        }
    }
    values
}

/// Gauss-Jordan elimination on an augmented nonsingular system.
fn solve(mut a: Vec<Vec<BigRational>>) -> Vec<BigRational> {
    let k = a.len();
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .expect("policy systems are nonsingular");
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
            }
        }
    }
    a.into_iter().map(|mut row| row.pop().expect("augmented")).collect()
}

/// Largest violation of the optimality equations, in exact arithmetic.
pub fn bellman_residual(m: &FiniteMdp, t: &FixedBitSet, values: &RationalValueTable) -> BigRational {
    let mut worst = BigRational::zero();
    for v in 0..m.num_vertices() {
        let expected = if t.contains(v) {
            BigRational::one()
        } else if m.is_probabilistic(v) {
            m.succ[v]
                .iter()
                .zip(&m.prob[v])
                .map(|(&u, p)| p * values.value(u))
                .sum()
        } else {
            m.succ[v]
                .iter()
                .map(|&u| values.value(u).clone())
                .max()
                .unwrap_or_else(BigRational::zero)
        };
        let r = (expected - values.value(v)).abs();
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Floating-point value iteration. Approximate; for previews only.
pub fn approximate_max_reach_values(m: &FiniteMdp, t: &FixedBitSet, iterations: usize) -> Vec<f64> {
    let n = m.num_vertices();
    let probs: Vec<Vec<f64>> = m
        .prob
        .iter()
        .map(|row| row.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect())
        .collect();
    let mut x: Vec<f64> = (0..n).map(|v| if t.contains(v) { 1.0 } else { 0.0 }).collect();
    for _ in 0..iterations {
        let next: Vec<f64> = (0..n)
            .map(|v| {
                if t.contains(v) {
                    1.0
                } else if m.is_probabilistic(v) {
                    m.succ[v].iter().zip(&probs[v]).map(|(&u, p)| p * x[u]).sum()
                } else {
                    m.succ[v].iter().map(|&u| x[u]).fold(0.0, f64::max)
                }
            })
            .collect();
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if delta < 1e-12 {
            break;
        }
    }
    x
}

/// An OC-MDP with a start location and the target locations `R`; the
/// objective is to reach `R x {0}`.
#[derive(Debug, Clone)]
pub struct MdpInstance {
    pub mdp: OcMdp,
    pub start: LocId,
    pub targets: Vec<LocId>,
}

fn div_loc(p: u64, j: u64) -> String {
    format!("div{p}.{j}")
}

/// Nests n-ary connectives into binary ones and drops singletons.
fn binarize(f: &CrrFormula) -> CrrFormula {
    match f {
        Formula::Var(_) => f.clone(),
        Formula::Not(a) => binarize(a).not(),
        Formula::And(xs) | Formula::Or(xs) => {
            let is_and = matches!(f, Formula::And(_));
            let mut parts: Vec<CrrFormula> = xs.iter().map(binarize).collect();
            if parts.len() <= 1 {
                return parts.pop().unwrap_or_else(|| f.clone());
            }
            let mut acc = parts.pop().expect("at least two parts");
            while let Some(x) = parts.pop() {
                acc = if is_and {
                    Formula::And(vec![x, acc])
                } else {
                    Formula::Or(vec![x, acc])
                };
            }
            acc
        }
    }
}

/// The OC-MDP of a residue formula: from `(q_F, M)` some strategy reaches
/// `R x {0}` almost surely iff `F(CRR(M))` holds; otherwise every strategy
/// stays below `1 - 2^-|F|`. Conjunctions are fair coin flips, disjunctions
/// are choices and a leaf `x_{i,r}` enters a counter-down cycle of length
/// `p_i` at phase `r`.
pub fn mdp_of_crr_formula(f: &CrrFormula, primes: &[u64]) -> Result<MdpInstance, MdpError> {
    if primes.is_empty() {
        return Err(GadgetError::NoPrimes.into());
    }
    let f = binarize(&eliminate_negations(f, primes)?);
    let mut b = OcMdpBuilder::new();
    let mut targets = Vec::new();
    for &p in primes {
        for j in 0..p {
            b.nondet(&div_loc(p, j));
        }
        for j in 0..p {
            let q = b.lookup(&div_loc(p, j)).expect("declared");
            let prev = b.lookup(&div_loc(p, (j + p - 1) % p)).expect("declared");
            b.pos(q, -1, prev, None)?.zero(q, 0, q, None)?;
        }
        targets.push(b.lookup(&div_loc(p, 0)).expect("declared"));
    }
    fn walk(
        f: &CrrFormula,
        path: &str,
        primes: &[u64],
        b: &mut OcMdpBuilder,
        targets: &mut Vec<LocId>,
    ) -> Result<LocId, MdpError> {
        let name = format!("q{path}");
        Ok(match f {
            Formula::Var(v) => {
                let q = b.nondet(&name);
                let p = primes[v.i - 1];
                let d = b.lookup(&div_loc(p, v.r)).expect("declared");
                b.both(q, 0, d, None)?;
                q
            }
            Formula::Or(xs) if xs.is_empty() => {
                let q = b.nondet(&name);
                b.both(q, 0, q, None)?;
                q
            }
            Formula::And(xs) if xs.is_empty() => {
                let q = b.nondet(&name);
                b.pos(q, -1, q, None)?.zero(q, 0, q, None)?;
                targets.push(q);
                q
            }
            Formula::Or(xs) | Formula::And(xs) => {
                let coin = matches!(f, Formula::And(_));
                let q = if coin { b.prob(&name) } else { b.nondet(&name) };
                let p = coin.then(|| BigRational::new(1.into(), BigInt::from(xs.len())));
                for (k, x) in xs.iter().enumerate() {
                    let c = walk(x, &format!("{path}.{k}"), primes, b, targets)?;
                    b.both(q, 0, c, p.clone())?;
                }
                q
            }
            Formula::Not(_) => unreachable!("negations were eliminated"),
        })
    }
    let start = walk(&f, "", primes, &mut b, &mut targets)?;
    Ok(MdpInstance {
        mdp: b.build()?,
        start,
        targets,
    })
}

/// An equivalent NFA (on non-empty words) whose final states have no
/// outgoing transitions and whose other states have at least one. Final
/// states get a fresh final copy `name'` without outgoing transitions; the
/// originals become non-final; states without transitions get a 0-loop.
pub fn separate_final_states(a: &Nfa) -> Nfa {
    let mut b = NfaBuilder::new();
    let states: Vec<usize> = (0..a.num_states()).map(|s| b.state(a.name(s))).collect();
    let copies: Vec<Option<usize>> = (0..a.num_states())
        .map(|s| a.is_final(s).then(|| b.state(&format!("{}'", a.name(s)))))
        .collect();
    b.initial(states[a.initial()]);
    for c in copies.iter().flatten() {
        b.accepting(*c);
    }
    let mut has_out = vec![false; a.num_states()];
    for &(s, bit, t) in a.transitions() {
        has_out[s] = true;
        b.transition(states[s], bit, states[t]);
        if let Some(c) = copies[t] {
            b.transition(states[s], bit, c);
        }
    }
    for s in (0..a.num_states()).filter(|&s| !has_out[s]) {
        b.transition(states[s], false, states[s]);
    }
    b.build().expect("initial state is set")
}

/// The OC-MDP that simulates `A` on the leaf string of `F`: the value at
/// `(s0, 0)` is 1 iff `A` accepts. Each NFA transition `(s, b, t)` becomes
/// a coin flip that either increments towards `t` or tests
/// `F(CRR(M)) = b and M != 2^m` in a gadget; final states test `M = 2^m`.
pub fn mdp_serial_compose(
    a: &Nfa,
    f: &CrrFormula,
    g: &CrrFormula,
    primes: &[u64],
) -> Result<MdpInstance, MdpError> {
    let mut out_degree = vec![0usize; a.num_states()];
    for &(s, _, _) in a.transitions() {
        out_degree[s] += 1;
    }
    for s in 0..a.num_states() {
        if a.is_final(s) && out_degree[s] > 0 {
            return Err(MdpError::NfaShape(format!(
                "final state `{}` has outgoing transitions",
                a.name(s)
            )));
        }
        if !a.is_final(s) && out_degree[s] == 0 {
            return Err(MdpError::NfaShape(format!(
                "non-final state `{}` has no outgoing transition",
                a.name(s)
            )));
        }
    }
    let not_g = g.clone().not();
    let one = mdp_of_crr_formula(&f.clone().and(not_g.clone()), primes)?;
    let zero = mdp_of_crr_formula(&f.clone().not().and(not_g), primes)?;
    let check = mdp_of_crr_formula(g, primes)?;

    let mut b = OcMdpBuilder::new();
    let states: Vec<LocId> = (0..a.num_states()).map(|s| b.nondet(a.name(s))).collect();
    let mut targets = Vec::new();
    let mut entries = Vec::new();
    for (prefix, gadget) in [("one/", &one), ("zero/", &zero), ("g/", &check)] {
        let map = b.embed(prefix, &gadget.mdp);
        targets.extend(gadget.targets.iter().map(|q| map[q.index()]));
        entries.push(map[gadget.start.index()]);
    }
    for &(s, bit, t) in a.transitions() {
        let mid = b.prob(&format!(
            "({},{},{})",
            a.name(s),
            u8::from(bit),
            a.name(t)
        ));
        let gadget = if bit { entries[0] } else { entries[1] };
        b.both(states[s], 0, mid, None)?
            .both(mid, 1, states[t], Some(half()))?
            .both(mid, 0, gadget, Some(half()))?;
    }
    for s in (0..a.num_states()).filter(|&s| a.is_final(s)) {
        b.both(states[s], 0, entries[2], None)?;
    }
    Ok(MdpInstance {
        mdp: b.build()?,
        start: states[a.initial()],
        targets,
    })
}

/// `1 - 2^-(2^m + 1 + |~F & ~G|) + 2^-(B - 2^m)`, the bound on the
/// optimistic value of a rejected instance truncated at `B > 2^m`.
pub fn serial_no_instance_bound(f: &CrrFormula, g: &CrrFormula, m: u32, bound: usize) -> BigRational {
    let size = f.clone().not().and(g.clone().not()).size();
    let pow = |e: usize| BigRational::new(1.into(), BigInt::from(2u32).pow(e as u32));
    let two_m = 1usize << m;
    BigRational::one() - pow(two_m + 1 + size) + pow(bound - two_m)
}

fn parse_prob(line: usize, s: &str) -> Result<BigRational, MdpError> {
    let bad = || MdpError::Syntax {
        line,
        msg: format!("`{s}` is not a probability"),
    };
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// Parses the OC-MDP format; returns the process and the target locations.
pub fn parse_ocmdp(text: &str) -> Result<(OcMdp, Vec<LocId>), MdpError> {
    let mut lines = content_lines(text);
    header(&mut lines, "ocmdp").map_err(|e| MdpError::Syntax {
        line: 1,
        msg: e.to_string(),
    })?;
    let mut b = OcMdpBuilder::new();
    let mut targets = Vec::new();
    let lookup = |b: &OcMdpBuilder, name: &str| {
        b.lookup(name)
            .ok_or_else(|| MdpError::UnknownLocation(name.to_string()))
    };
    for (line, w) in lines {
        let syntax = |msg: String| MdpError::Syntax { line, msg };
        match w[0] {
            "nloc" => w[1..].iter().for_each(|n| {
                b.nondet(n);
            }),
            "ploc" => w[1..].iter().for_each(|n| {
                b.prob(n);
            }),
            "target" => {
                for n in &w[1..] {
                    targets.push(lookup(&b, n)?);
                }
            }
            kw @ ("zero" | "pos") => {
                if w.len() != 4 && w.len() != 5 {
                    return Err(syntax(format!("expected `{kw} SRC DELTA DST [P]`")));
                }
                let src = lookup(&b, w[1])?;
                let dst = lookup(&b, w[3])?;
                let d = parse_int(line, w[2]).map_err(|e| syntax(e.to_string()))?;
                let p = w.get(4).map(|s| parse_prob(line, s)).transpose()?;
                let side = if kw == "zero" { Side::Zero } else { Side::Positive };
                b.add(side, src, d, dst, p)?;
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }
    Ok((b.build()?, targets))
}

pub fn write_ocmdp(a: &OcMdp, targets: &[LocId]) -> String {
    let mut out = String::from("ocmdp\n");
    let ocp = a.ocp();
    // Runs of equal kind keep location ids stable on re-parsing.
    let mut run: Option<(bool, Vec<&str>)> = None;
    for q in ocp.locations() {
        let p = a.is_probabilistic(q);
        match &mut run {
            Some((kind, names)) if *kind == p => names.push(ocp.name(q)),
            _ => {
                if let Some((kind, names)) = run.take() {
                    let _ = writeln!(out, "{} {}", if kind { "ploc" } else { "nloc" }, names.join(" "));
                }
                run = Some((p, vec![ocp.name(q)]));
            }
        }
    }
    if let Some((kind, names)) = run {
        let _ = writeln!(out, "{} {}", if kind { "ploc" } else { "nloc" }, names.join(" "));
    }
    for (side, kw) in [(Side::Zero, "zero"), (Side::Positive, "pos")] {
        for q in ocp.locations() {
            let probs = a.probabilities(side, q);
            for (j, &(d, t)) in ocp.outgoing(side, q).iter().enumerate() {
                let delta = if d > 0 { "+1".to_string() } else { d.to_string() };
                let _ = write!(out, "{kw} {} {delta} {}", ocp.name(q), ocp.name(t));
                if let Some(p) = probs.get(j) {
                    let _ = write!(out, " {p}");
                }
                out.push('\n');
            }
        }
    }
    if !targets.is_empty() {
        let names: Vec<&str> = targets.iter().map(|&q| ocp.name(q)).collect();
        let _ = writeln!(out, "target {}", names.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::crr::crr_equals_formula;
    use crate::gadgets::formula::parse_crr_formula;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn value_at(inst: &MdpInstance, n: usize, bound: usize, frontier: Frontier) -> BigRational {
        let m = induced_finite_mdp(&inst.mdp, (inst.start, n), bound, frontier).unwrap();
        let t = m.targets(&inst.targets);
        let vals = exact_max_reach_values(&m, &t).unwrap();
        assert!(bellman_residual(&m, &t, &vals).is_zero());
        let v = m.vertex(inst.start, n).unwrap();
        let sure = almost_sure_reach(&m, &t);
        for u in 0..m.num_vertices() {
            assert_eq!(sure.contains(u), vals.value(u).is_one());
        }
        vals.value(v).clone()
    }

    #[test]
    fn fair_coin() {
        let (a, targets) = parse_ocmdp(
            "ocmdp\nploc c\nnloc win lose\nzero c 0 win 1/2\nzero c 0 lose 1/2\npos c -1 c 1\n\
             zero win 0 win\npos win -1 win\nzero lose 0 lose\npos lose 0 lose\ntarget win\n",
        )
        .unwrap();
        let c = a.ocp().loc("c").unwrap();
        let m = induced_finite_mdp(&a, (c, 0), 3, Frontier::Pessimistic).unwrap();
        let t = m.targets(&targets);
        let vals = exact_max_reach_values(&m, &t).unwrap();
        assert_eq!(vals.value(m.vertex(c, 0).unwrap()), &r(1, 2));
        let win = m.vertex(a.ocp().loc("win").unwrap(), 0).unwrap();
        assert!(almost_sure_reach(&m, &t).contains(win));
        assert!(!almost_sure_reach(&m, &t).contains(m.vertex(c, 0).unwrap()));
        assert_eq!(parse_ocmdp(&write_ocmdp(&a, &targets)).unwrap().0, a);
    }

    #[test]
    fn retry_loop_has_value_one() {
        // A coin that returns to its chooser is won almost surely.
        let (a, targets) = parse_ocmdp(
            "ocmdp\nnloc s win\nploc c\nzero s 0 c\npos s 0 c\nzero c 0 s 1/2\nzero c 0 win 1/2\n\
             pos c 0 s 1/2\npos c 0 win 1/2\nzero win 0 win\npos win -1 win\ntarget win\n",
        )
        .unwrap();
        let s = a.ocp().loc("s").unwrap();
        let inst = MdpInstance {
            mdp: a,
            start: s,
            targets,
        };
        assert!(value_at(&inst, 0, 2, Frontier::Pessimistic).is_one());
        assert!(value_at(&inst, 2, 2, Frontier::Pessimistic).is_one());
    }

    #[test]
    fn validation() {
        assert!(matches!(
            parse_ocmdp("ocmdp\nploc c\nnloc a\nzero c 0 a 1/3\n"),
            Err(MdpError::BadDistribution { .. })
        ));
        assert!(matches!(
            parse_ocmdp("ocmdp\nploc c\nnloc a\nzero c 0 a\n"),
            Err(MdpError::MissingProbability(_))
        ));
        assert!(matches!(
            parse_ocmdp("ocmdp\nnloc a\nzero a 0 a 1\n"),
            Err(MdpError::UnexpectedProbability(_))
        ));
        let (a, _) = parse_ocmdp("ocmdp\nnloc a\nzero a 0 a\n").unwrap();
        assert!(!a.is_wellformed());
        assert!(induced_finite_mdp(&a, (LocId(0), 0), 1, Frontier::Optimistic).is_err());
        let (c, added) = complete_wellformed(&a);
        assert_eq!(added, vec![(LocId(0), Side::Positive)]);
        assert!(c.is_wellformed());
        assert_eq!(complete_wellformed(&c).1, vec![]);
    }

    #[test]
    fn residue_gadget() {
        let primes = [2];
        let odd = mdp_of_crr_formula(&parse_crr_formula("x1_1").unwrap(), &primes).unwrap();
        assert!(odd.mdp.is_wellformed());
        assert!(value_at(&odd, 1, 1, Frontier::Pessimistic).is_one());
        assert!(value_at(&odd, 2, 2, Frontier::Pessimistic) < BigRational::one());
        let any = mdp_of_crr_formula(&parse_crr_formula("x1_0 | x1_1").unwrap(), &primes).unwrap();
        for n in 0..4 {
            assert!(value_at(&any, n, n, Frontier::Pessimistic).is_one());
        }
        let f = parse_crr_formula("x1_0 & x1_1").unwrap();
        let none = mdp_of_crr_formula(&f, &primes).unwrap();
        let v = value_at(&none, 1, 1, Frontier::Pessimistic);
        assert_eq!(v, r(1, 2));
        assert!(v <= BigRational::one() - r(1, 1 << f.size()));
        // No increments, so the frontier is irrelevant.
        let m = induced_finite_mdp(&none.mdp, (none.start, 3), 3, Frontier::Optimistic).unwrap();
        assert!(!m.sink_reachable());
    }

    #[test]
    fn serial_yes_and_no() {
        let primes = [2, 3];
        let g = crr_equals_formula(&primes, &4u32.into());
        let f = parse_crr_formula("x1_0").unwrap();
        // Accepts exactly 1010.
        let mut b = NfaBuilder::new();
        let s: Vec<usize> = (0..5).map(|i| b.state(&format!("s{i}"))).collect();
        b.initial(s[0]).accepting(s[4]);
        for (i, bit) in [true, false, true, false].into_iter().enumerate() {
            b.transition(s[i], bit, s[i + 1]);
        }
        let a = b.build().unwrap();
        let yes = mdp_serial_compose(&a, &f, &g, &primes).unwrap();
        assert!(yes.mdp.is_wellformed());
        assert!(value_at(&yes, 0, 5, Frontier::Pessimistic).is_one());

        let odd = parse_crr_formula("x1_1").unwrap();
        let no = mdp_serial_compose(&a, &odd, &g, &primes).unwrap();
        let bound = 4 + odd.size() + 10;
        let v = value_at(&no, 0, bound, Frontier::Optimistic);
        assert!(v <= serial_no_instance_bound(&odd, &g, 2, bound), "{v}");
        assert!(value_at(&no, 0, bound, Frontier::Pessimistic) <= v);
    }

    #[test]
    fn separated_nfa_keeps_language() {
        let mut b = NfaBuilder::new();
        let (p, q) = (b.state("p"), b.state("q"));
        b.initial(p)
            .accepting(q)
            .transition(p, true, q)
            .transition(q, false, q)
            .transition(q, true, p);
        let a = b.build().unwrap();
        let s = separate_final_states(&a);
        for len in 1..6u32 {
            for w in 0..1u32 << len {
                let word: Vec<bool> = (0..len).map(|i| w >> i & 1 == 1).collect();
                assert_eq!(a.accepts(&word), s.accepts(&word), "{word:?}");
            }
        }
        let f = parse_crr_formula("x1_0").unwrap();
        let g = crr_equals_formula(&[2, 3], &4u32.into());
        assert!(mdp_serial_compose(&s, &f, &g, &[2, 3]).is_ok());
        assert!(matches!(
            mdp_serial_compose(&a, &f, &g, &[2, 3]),
            Err(MdpError::NfaShape(_))
        ));
    }
}
