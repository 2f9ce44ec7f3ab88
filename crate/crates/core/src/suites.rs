//! Cross-validation suites. Each suite compares a construction or engine
//! against an independent ground truth over a fixed, seeded family of
//! instances and reports a pass count with the first counterexample.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{bit, crr, lcm_upto, parity_divisible_count, Parity};
use crate::checker::{
    capped_stable, evaluate_capped, evaluate_periodic, evaluate_three_valued, period_params,
    BoundedOracle, ThreeValued,
};
use crate::ctl::Ctl;
use crate::gadgets::circuit::{ef_of_circuit, ocn_of_circuit, GateKind, LayeredCircuit};
use crate::gadgets::crr::{
    crr_equals_formula, crr_formula_of_predicate, exit_goal, fixed_ef_formula, ocn_of_crr_formula,
};
use crate::gadgets::fig7::{figure7, phi_div, psi_bit};
use crate::gadgets::formula::{CrrFormula, CrrVar, Formula};
use crate::gadgets::qbf::{qbf_reduce, Qbf, Quantifier};
use crate::gadgets::serial::{leafstring_oracle, serial_compose, SerialVariant};
use crate::gadgets::wagner::{lexmax_even_oracle, wagner_reduce};
use crate::nfa::{Nfa, NfaBuilder};
use crate::ocmdp::{
    almost_sure_reach, bellman_residual, exact_max_reach_values, induced_finite_mdp,
    induced_finite_mdp_from, mdp_of_crr_formula, mdp_serial_compose, separate_final_states,
    serial_no_instance_bound, Frontier, MdpInstance,
};
use crate::ocp::{Configuration, LocId, Ocp, OcpBuilder};

pub const SUITES: [&str; 12] = [
    "lemma2",
    "lemma4",
    "fact14",
    "periodicity",
    "qbf",
    "prop1",
    "thm8",
    "prop2",
    "wagner",
    "lemma5mdp",
    "thm10mdp",
    "honesty",
];

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    pub first_failure: Option<String>,
    /// Conditions on the suite as a whole, such as coverage.
    pub violations: Vec<String>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total && self.total > 0 && self.violations.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{}: {verdict} {}/{} cases ({:.1} s)",
            self.name,
            self.passed,
            self.total,
            self.elapsed.as_secs_f64()
        )?;
        if let Some(c) = &self.first_failure {
            write!(f, "; first counterexample: {c}")?;
        }
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

struct Tally {
    name: &'static str,
    start: Instant,
    passed: usize,
    total: usize,
    first_failure: Option<String>,
    violations: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            start: Instant::now(),
            passed: 0,
            total: 0,
            first_failure: None,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, case: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(case());
        }
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(msg());
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            passed: self.passed,
            total: self.total,
            first_failure: self.first_failure,
            violations: self.violations,
            notes: self.notes,
            elapsed: self.start.elapsed(),
        }
    }
}

/// Runs a suite by name. `fig` replaces the built-in fixed net for the
/// suites that use it.
pub fn run(name: &str, fig: Option<&Ocp>) -> Option<SuiteReport> {
    let builtin;
    let fig = match fig {
        Some(o) => o,
        None => {
            builtin = figure7();
            &builtin
        }
    };
    Some(match name {
        "lemma2" => lemma2(fig, 6, 300),
        "lemma4" => lemma4(fig, 6, 300),
        "fact14" => fact14(10_000, 12),
        "periodicity" => periodicity(200, 0x5eed),
        "qbf" => qbf(3, 9),
        "prop1" => prop1(3, 12, 0x9e37),
        "thm8" => thm8(12, 0x7e8),
        "prop2" => prop2(),
        "wagner" => wagner(3),
        "lemma5mdp" => lemma5mdp(2, 8),
        "thm10mdp" => thm10mdp(12, 0x10),
        "honesty" => honesty(fig),
        _ => return None,
    })
}

// ---------------------------------------------------------------------------
// Instance generators

/// Every formula of size at most `max_size` built from variables,
/// negated variables and binary conjunctions and disjunctions, up to
/// commutativity.
pub fn enumerate_formulas<V: Clone>(vars: &[V], max_size: usize) -> Vec<Formula<V>> {
    let mut by_size: Vec<Vec<Formula<V>>> = vec![Vec::new(); max_size + 1];
    for s in 1..=max_size {
        let mut here = Vec::new();
        if s == 1 {
            here.extend(vars.iter().cloned().map(Formula::Var));
        }
        if s == 2 {
            here.extend(vars.iter().cloned().map(|v| Formula::Var(v).not()));
        }
        for a in 1..s.saturating_sub(1) {
            let b = s - 1 - a;
            if a > b {
                break;
            }
            for (i, x) in by_size[a].iter().enumerate() {
                let start = if a == b { i + 1 } else { 0 };
                for y in &by_size[b][start..] {
                    here.push(Formula::And(vec![x.clone(), y.clone()]));
                    here.push(Formula::Or(vec![x.clone(), y.clone()]));
                }
            }
        }
        by_size[s] = here;
    }
    by_size.into_iter().flatten().collect()
}

/// A random formula of size at most `budget` with negations anywhere and
/// connectives of arity 2 or 3.
pub fn random_formula<V: Clone>(rng: &mut impl Rng, vars: &[V], budget: usize) -> Formula<V> {
    let leaf = |rng: &mut dyn rand::RngCore| {
        Formula::Var(vars.choose(rng).expect("non-empty variables").clone())
    };
    if budget <= 1 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    if budget == 2 || rng.gen_bool(0.2) {
        return random_formula(rng, vars, budget - 1).not();
    }
    let arity = if budget >= 5 && rng.gen_bool(0.3) { 3 } else { 2 };
    let mut rest = budget - (arity - 1);
    let mut kids = Vec::new();
    for k in 0..arity {
        let left = arity - k - 1;
        let share = if left == 0 {
            rest
        } else {
            rng.gen_range(1..=rest - left)
        };
        rest -= share;
        kids.push(random_formula(rng, vars, share));
    }
    if rng.gen_bool(0.5) {
        Formula::And(kids)
    } else {
        Formula::Or(kids)
    }
}

fn crr_vars(primes: &[u64]) -> Vec<CrrVar> {
    primes
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..p).map(move |r| CrrVar { i: i + 1, r }))
        .collect()
}

fn random_nfa(rng: &mut impl Rng, max_states: usize) -> Nfa {
    let n = rng.gen_range(1..=max_states);
    let mut b = NfaBuilder::new();
    let states: Vec<usize> = (0..n).map(|i| b.state(&format!("s{i}"))).collect();
    b.initial(states[0]);
    for &s in &states {
        if rng.gen_bool(0.4) {
            b.accepting(s);
        }
        for bit in [false, true] {
            for &t in &states {
                if rng.gen_bool(0.4) {
                    b.transition(s, bit, t);
                }
            }
        }
    }
    b.build().expect("initial state set")
}

fn random_ocp(rng: &mut impl Rng, max_locations: usize) -> Ocp {
    let k = rng.gen_range(1..=max_locations);
    let mut b = OcpBuilder::new();
    let locs: Vec<LocId> = (0..k).map(|i| b.location(&format!("l{i}"))).collect();
    for &q in &locs {
        for prop in ["p", "q"] {
            if rng.gen_bool(0.4) {
                b.label(prop, q);
            }
        }
        for &t in &locs {
            for d in 0..=1 {
                if rng.gen_bool(0.25) {
                    b.zero(q, d, t).expect("valid delta");
                }
            }
            for d in -1..=1 {
                if rng.gen_bool(0.3) {
                    b.pos(q, d, t).expect("valid delta");
                }
            }
        }
    }
    b.build().expect("non-empty")
}

fn random_core_ctl(rng: &mut impl Rng, budget: usize) -> Ctl {
    if budget <= 1 || rng.gen_bool(0.15) {
        return match rng.gen_range(0..6) {
            0 => Ctl::True,
            1 => Ctl::False,
            2 | 3 => Ctl::atom("p"),
            _ => Ctl::atom("q"),
        };
    }
    match rng.gen_range(0..6) {
        0 => random_core_ctl(rng, budget - 1).not(),
        1 => random_core_ctl(rng, budget - 1).ex(),
        op => {
            if budget < 3 {
                return random_core_ctl(rng, budget - 1).not();
            }
            let left = rng.gen_range(1..=budget - 2);
            let a = random_core_ctl(rng, left);
            let b = random_core_ctl(rng, budget - 1 - left);
            match op {
                2 => a.and(b),
                3 | 4 => a.eu(b),
                _ => a.ew(b),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The fixed net

fn fig_locations(fig: &Ocp, names: &[&str]) -> Result<Vec<LocId>, String> {
    names
        .iter()
        .map(|n| fig.loc(n).map_err(|e| e.to_string()))
        .collect()
}

/// `phi_i` at `(t, n)` holds iff `2^i | n`, and at `(tb, n)` iff not.
pub fn lemma2(fig: &Ocp, max_i: u32, max_n: usize) -> SuiteReport {
    let mut tally = Tally::new("lemma2");
    let locs = match fig_locations(fig, &["t", "tb"]) {
        Ok(l) => l,
        Err(e) => {
            tally.check(false, || e);
            return tally.finish();
        }
    };
    for i in 1..=max_i {
        let phi = phi_div(i);
        let mut oracle = BoundedOracle::new(fig, &phi, 512);
        for n in 0..=max_n {
            let divides = n % (1usize << i) == 0;
            let at_t = oracle.query(locs[0], n).verdict.definite();
            let at_tb = oracle.query(locs[1], n).verdict.definite();
            tally.check(at_t == Some(divides) && at_tb == Some(!divides), || {
                format!("i={i} n={n}: t -> {at_t:?}, tb -> {at_tb:?}")
            });
        }
    }
    tally.finish()
}

/// `psi_i` at `(tb, n)` holds iff bit `i` of `n` is 1.
pub fn lemma4(fig: &Ocp, max_i: u32, max_n: usize) -> SuiteReport {
    let mut tally = Tally::new("lemma4");
    let tb = match fig_locations(fig, &["tb"]) {
        Ok(l) => l[0],
        Err(e) => {
            tally.check(false, || e);
            return tally.finish();
        }
    };
    for i in 1..=max_i {
        let psi = psi_bit(i);
        let mut oracle = BoundedOracle::new(fig, &psi, 512);
        for n in 0..=max_n {
            let expected = (n >> (i - 1)) & 1 == 1;
            debug_assert_eq!(expected, bit(i as u64, &BigUint::from(n)));
            let got = oracle.query(tb, n).verdict.definite();
            tally.check(got == Some(expected), || format!("i={i} n={n}: {got:?}"));
        }
    }
    tally.finish()
}

/// Divisibility by powers of two, bits and divisor-count parity against
/// direct counting; the bounds `2^k <= lcm(1..k) <= 4^k`.
pub fn fact14(max_n: u64, max_i: u64) -> SuiteReport {
    let mut tally = Tally::new("fact14");
    for i in 1..=max_i {
        let step = 1u64 << (i - 1);
        let mut count = 0u64;
        for n in 0..=max_n {
            if n > 0 && n % step == 0 {
                count += 1;
            }
            let big = BigUint::from(n);
            let parity = parity_divisible_count(i, &big);
            let counted = if count.is_multiple_of(2) {
                Parity::Even
            } else {
                Parity::Odd
            };
            let fact1 = (n % (1 << i) == 0) == (n % step == 0 && counted == Parity::Even);
            let fact4 = bit(i, &big) == (counted == Parity::Odd);
            tally.check(parity == counted && fact1 && fact4, || format!("i={i} n={n}"));
        }
    }
    let mut lcm = BigUint::one();
    for k in 1..=64u64 {
        lcm = lcm.lcm(&BigUint::from(k));
        if k < 9 {
            continue;
        }
        let got = lcm_upto(k).ok();
        let lower = BigUint::one() << k;
        let upper = BigUint::one() << (2 * k);
        tally.check(
            got.as_ref() == Some(&lcm) && lower <= lcm && lcm <= upper,
            || format!("k={k}"),
        );
    }
    tally.finish()
}

// ---------------------------------------------------------------------------
// Periodic engine against the three-valued oracle

/// Random small OCPs and core formulas with `lud <= 1`: wherever the
/// three-valued oracle at `t + 3K` is definite it must agree with the
/// periodic engine on `n <= t + K`. Coverage must reach 70 %.
pub fn periodicity(instances: usize, seed: u64) -> SuiteReport {
    let mut tally = Tally::new("periodicity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut definite, mut points) = (0usize, 0usize);
    let mut made = 0;
    while made < instances {
        let ocp = random_ocp(&mut rng, 3);
        let phi = random_core_ctl(&mut rng, 9);
        if phi.lud() > 1 || phi.size() > 9 {
            continue;
        }
        made += 1;
        let params = period_params(&ocp, &phi);
        let t = params.threshold().to_usize().expect("small threshold");
        let k = params.period().to_usize().expect("small period");
        let exact = match evaluate_periodic(&ocp, &phi) {
            Ok(table) => table,
            Err(e) => {
                tally.check(false, || format!("{phi}: {e}"));
                continue;
            }
        };
        let tv = evaluate_three_valued(&ocp, &phi, t + 3 * k);
        let mut disagreement = None;
        for q in ocp.locations() {
            for n in 0..=t + k {
                points += 1;
                if let Some(v) = tv.value(q, n).definite() {
                    definite += 1;
                    if v != exact.holds(q, &BigUint::from(n)) && disagreement.is_none() {
                        disagreement = Some((q, n));
                    }
                }
            }
        }
        tally.check(disagreement.is_none(), || {
            let (q, n) = disagreement.expect("set on failure");
            format!("{phi} at ({}, {n}) on\n{}", ocp.name(q), crate::text::write_ocp(&ocp))
        });
    }
    let coverage = definite as f64 / points.max(1) as f64;
    tally.notes.push(format!("definite coverage {:.1} %", 100.0 * coverage));
    tally.require(coverage >= 0.7, || {
        format!("coverage {:.1} % below 70 %", 100.0 * coverage)
    });
    tally.finish()
}

// ---------------------------------------------------------------------------
// Gadget suites

/// Every prenex QBF with at most `max_vars` variables whose matrix uses all
/// of them and has size at most `max_size`.
pub fn qbf(max_vars: usize, max_size: usize) -> SuiteReport {
    let mut tally = Tally::new("qbf");
    let fig = figure7();
    let tb = fig.loc("tb").expect("fixed net has tb");
    for k in 1..=max_vars {
        let vars: Vec<usize> = (1..=k).collect();
        let matrices: Vec<_> = enumerate_formulas(&vars, max_size)
            .into_iter()
            .filter(|f| {
                let mut seen = vec![false; k];
                f.for_each_var(&mut |&i| seen[i - 1] = true);
                seen.iter().all(|&s| s)
            })
            .collect();
        let bound = 1usize << (k + 2);
        for mask in 0..1u32 << k {
            let quantifiers: Vec<Quantifier> = (0..k)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        Quantifier::Forall
                    } else {
                        Quantifier::Exists
                    }
                })
                .collect();
            for matrix in &matrices {
                let alpha = Qbf::new(quantifiers.clone(), matrix.clone()).expect("bound");
                let theta = qbf_reduce(&alpha).expect("valid prefix");
                let got = capped_stable(&fig, &theta, tb, 0, bound).definite();
                let expected = alpha.is_valid();
                tally.check(got == Some(expected), || format!("{alpha}: {got:?}"));
            }
        }
    }
    tally.finish()
}

/// Residue formula nets: a fixed-formula path from `(in, M)` to `out`
/// exists iff `F(CRR(M))`. Formulas: all of size at most 3 and seeded
/// random ones up to `max_size`.
pub fn prop1(max_m: usize, max_size: usize, seed: u64) -> SuiteReport {
    let mut tally = Tally::new("prop1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in 1..=max_m {
        let primes = crate::arith::primes_first(m);
        let product: u64 = primes.iter().product();
        let vars = crr_vars(&primes);
        let mut family = enumerate_formulas(&vars, 3);
        family.extend((0..60).map(|_| random_formula(&mut rng, &vars, max_size)));
        for f in family {
            let g = ocn_of_crr_formula(&f, &primes).expect("valid formula");
            let (ocp, goal) = exit_goal(&g).expect("formula nets have an exit");
            // No transition increments, so counters stay at most M.
            let tv = evaluate_three_valued(&ocp, &goal, product as usize);
            for value in 0..product {
                let a = crr(&primes, &BigUint::from(value)).expect("in range");
                let got = tv.value(g.input, value as usize).definite();
                tally.check(got == Some(f.eval_crr(&a)), || {
                    format!("F = {f}, primes {primes:?}, M = {value}: {got:?}")
                });
            }
        }
    }
    tally.finish()
}

/// NFA simulation as EU and as EG against the leaf-string oracle, plus a
/// scan that fixed-formula paths never carry an NFA state above `2^m`.
pub fn thm8(per_answer: usize, seed: u64) -> SuiteReport {
    let mut tally = Tally::new("thm8");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let primes = [2u64, 3];
    let m = 2;
    let g = crr_equals_formula(&primes, &BigUint::from(1u32 << m));
    let bound = 6 + 2;
    let instances = serial_instances(&mut rng, per_answer, &primes, m, |a| a);
    for (a, truth, expected) in &instances {
        let f = crr_formula_of_predicate(truth, &primes, m).expect("in range");
        for variant in [SerialVariant::Until, SerialVariant::Globally] {
            let inst = serial_compose(a, &f, &g, &primes, variant).expect("leaf conjunction");
            let got = capped_stable(&inst.ocp, &inst.goal, inst.start, 0, bound).definite();
            tally.check(got == Some(*expected), || {
                format!("{variant:?} truth {truth:?} NFA\n{}", crate::text::write_nfa(a))
            });
            if variant == SerialVariant::Until {
                let high = high_nfa_configuration(&inst.ocp, inst.start, bound, 1 << m);
                tally.check(high.is_none(), || {
                    format!("fixed-formula path reaches {}", high.expect("set"))
                });
            }
        }
    }
    require_balance(&mut tally, &instances, per_answer);
    tally.finish()
}

/// Random NFAs and truth tables, `per_answer` accepted and as many rejected
/// by the leaf-string oracle. Gives up after a fixed number of draws.
fn serial_instances(
    rng: &mut impl Rng,
    per_answer: usize,
    primes: &[u64],
    m: u32,
    prepare: impl Fn(Nfa) -> Nfa,
) -> Vec<(Nfa, Vec<bool>, bool)> {
    let mut out = Vec::new();
    let (mut yes, mut no) = (0, 0);
    for _ in 0..100 * per_answer {
        if yes >= per_answer && no >= per_answer {
            break;
        }
        let a = prepare(random_nfa(rng, 3));
        let truth: Vec<bool> = (0..1 << m).map(|_| rng.gen_bool(0.5)).collect();
        let f = crr_formula_of_predicate(&truth, primes, m).expect("in range");
        let accepted = leafstring_oracle(&a, &f, primes, m).expect("in range");
        let count = if accepted { &mut yes } else { &mut no };
        if *count < per_answer {
            *count += 1;
            out.push((a, truth, accepted));
        }
    }
    out
}

fn require_balance(tally: &mut Tally, instances: &[(Nfa, Vec<bool>, bool)], per_answer: usize) {
    let yes = instances.iter().filter(|i| i.2).count();
    let no = instances.len() - yes;
    tally.notes.push(format!("{yes} accepted, {no} rejected"));
    tally.require(yes >= per_answer && no >= per_answer, || {
        format!("only {yes} accepted and {no} rejected instances generated")
    });
}

/// An NFA-state configuration with counter above `limit` reachable from
/// `(start, 0)` along fixed-formula states, if any.
fn high_nfa_configuration(ocp: &Ocp, start: LocId, bound: usize, limit: usize) -> Option<String> {
    let table = evaluate_capped(ocp, &fixed_ef_formula(), bound);
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![(start, 0usize)];
    while let Some((q, n)) = stack.pop() {
        if !seen.insert((q, n)) || !table.holds(q, n) {
            continue;
        }
        if ocp.name(q).starts_with("s_") && n > limit {
            return Some(format!("({}, {n})", ocp.name(q)));
        }
        let succ = ocp
            .successors(&Configuration::new(q, n as u64))
            .expect("valid location");
        for c in succ {
            let n = c.counter.to_usize().expect("small counter");
            if n <= bound {
                stack.push((c.location, n));
            }
        }
    }
    None
}

/// All layered circuits with at most 3 layers and 6 gates over `[2, 3]`, up
/// to reordering.
pub fn all_small_circuits() -> Vec<LayeredCircuit> {
    let vars = crr_vars(&[2, 3]);
    let kinds = [GateKind::And, GateKind::Or];
    let mut out = Vec::new();
    for v in &vars {
        out.push(LayeredCircuit::new(vec![], vec![*v]).expect("valid"));
    }
    let subsets = |n: usize| -> Vec<Vec<usize>> {
        (1..1u32 << n)
            .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
            .collect()
    };
    for inputs in subsets(vars.len()) {
        let n_in = inputs.len();
        let inputs: Vec<CrrVar> = inputs.iter().map(|&i| vars[i]).collect();
        if n_in < 6 {
            for kind in kinds {
                let layers = vec![(kind, vec![(0..n_in).collect()])];
                out.push(LayeredCircuit::new(layers, inputs.clone()).expect("valid"));
            }
        }
        // Middle layers: sets of distinct child sets covering all inputs.
        let child_sets = subsets(n_in);
        for g2 in 1..=(6usize.saturating_sub(1 + n_in)) {
            for pick in choose(child_sets.len(), g2) {
                let gates: Vec<Vec<usize>> = pick.iter().map(|&j| child_sets[j].clone()).collect();
                let mut covered = vec![false; n_in];
                gates.iter().flatten().for_each(|&c| covered[c] = true);
                if !covered.iter().all(|&c| c) {
                    continue;
                }
                for top in kinds {
                    for mid in kinds {
                        let layers = vec![(top, vec![(0..g2).collect()]), (mid, gates.clone())];
                        out.push(LayeredCircuit::new(layers, inputs.clone()).expect("valid"));
                    }
                }
            }
        }
    }
    out
}

fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `(in, M) |= phi(C)` iff `C(CRR(M))` for every small circuit and `M < 6`.
pub fn prop2() -> SuiteReport {
    let mut tally = Tally::new("prop2");
    let primes = [2u64, 3];
    let circuits = all_small_circuits();
    tally.notes.push(format!("{} circuits", circuits.len()));
    for c in &circuits {
        debug_assert!(c.is_connected());
        let g = ocn_of_circuit(c, &primes).expect("valid circuit");
        let tv = evaluate_three_valued(&g.ocp, &ef_of_circuit(c), 6);
        for value in 0..6u32 {
            let a = crr(&primes, &BigUint::from(value)).expect("in range");
            let got = tv.value(g.input, value as usize).definite();
            tally.check(got == Some(c.eval(&a)), || {
                format!(
                    "M = {value}: {got:?} for\n{}",
                    crate::gadgets::circuit::write_circuit(c)
                )
            });
        }
    }
    tally.finish()
}

/// Every Boolean function of at most `max_vars` variables, as a DNF of its
/// minterms: the reduction's verdict equals the lex-max parity.
pub fn wagner(max_vars: u32) -> SuiteReport {
    let mut tally = Tally::new("wagner");
    for m in 1..=max_vars {
        let rows = 1usize << m;
        for table in 0..1u64 << rows {
            let psi = Formula::Or(
                (0..rows)
                    .filter(|r| table >> r & 1 == 1)
                    .map(|r| {
                        Formula::And(
                            (1..=m as usize)
                                .map(|i| {
                                    let x = Formula::Var(i);
                                    if r >> (i - 1) & 1 == 1 {
                                        x
                                    } else {
                                        x.not()
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            );
            let w = wagner_reduce(&psi, m).expect("valid formula");
            let got = capped_stable(&w.ocp, &w.goal, w.start, 0, w.bound()).definite();
            let expected = lexmax_even_oracle(&psi, m);
            tally.check(got == Some(expected), || format!("m={m} psi={psi}: {got:?}"));
        }
    }
    tally.finish()
}

// ---------------------------------------------------------------------------
// OC-MDP suites

/// Residue formulas as OC-MDPs: true means almost-sure reachability, false
/// means value at most `1 - 2^-|F|`. All formulas up to `max_size`.
pub fn lemma5mdp(max_m: usize, max_size: usize) -> SuiteReport {
    let mut tally = Tally::new("lemma5mdp");
    for m in 1..=max_m {
        let primes = crate::arith::primes_first(m);
        let product: usize = primes.iter().product::<u64>() as usize;
        for f in enumerate_formulas(&crr_vars(&primes), max_size) {
            let inst = mdp_of_crr_formula(&f, &primes).expect("valid formula");
            tally.check(inst.mdp.is_wellformed(), || format!("{f}: ill-formed"));
            let starts: Vec<(LocId, usize)> = (0..product).map(|n| (inst.start, n)).collect();
            let fin = induced_finite_mdp_from(&inst.mdp, &starts, product - 1, Frontier::Pessimistic)
                .expect("well-formed");
            let t = fin.targets(&inst.targets);
            let sure = almost_sure_reach(&fin, &t);
            let values = exact_max_reach_values(&fin, &t).expect("within budget");
            let limit = BigRational::one()
                - BigRational::new(1.into(), num_bigint::BigInt::from(2u32).pow(f.size() as u32));
            for value in 0..product {
                let v = fin.vertex(inst.start, value).expect("start kept");
                let holds = f.eval_crr(&crr(&primes, &BigUint::from(value)).expect("in range"));
                let ok = if holds {
                    sure.contains(v)
                } else {
                    !sure.contains(v) && values.value(v) <= &limit
                };
                tally.check(ok, || {
                    format!("F = {f}, M = {value}: value {}", values.value(v))
                });
            }
        }
    }
    tally.finish()
}

fn mdp_value(inst: &MdpInstance, bound: usize, frontier: Frontier) -> BigRational {
    let fin = induced_finite_mdp(&inst.mdp, (inst.start, 0), bound, frontier).expect("well-formed");
    let t = fin.targets(&inst.targets);
    let values = exact_max_reach_values(&fin, &t).expect("within budget");
    debug_assert!(num_traits::Zero::is_zero(&bellman_residual(&fin, &t, &values)));
    values
        .value(fin.vertex(inst.start, 0).expect("start"))
        .clone()
}

/// The OC-MDP NFA simulation: accepted instances have pessimistic value 1
/// at `2^m + 1`, rejected ones respect the optimistic bound at
/// `2^m + |F| + 10`, and values are sandwiched across the two bounds.
pub fn thm10mdp(per_answer: usize, seed: u64) -> SuiteReport {
    let mut tally = Tally::new("thm10mdp");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let primes = [2u64, 3];
    let m = 2u32;
    let two_m = 1usize << m;
    let g = crr_equals_formula(&primes, &BigUint::from(two_m));
    let instances = serial_instances(&mut rng, per_answer, &primes, m, |a| {
        separate_final_states(&a)
    });
    for (a, truth, accepted) in &instances {
        let f = crr_formula_of_predicate(truth, &primes, m).expect("in range");
        let inst = mdp_serial_compose(a, &f, &g, &primes).expect("separated NFA");
        let small = two_m + 1;
        let large = two_m + f.size() + 10;
        let pess_small = mdp_value(&inst, small, Frontier::Pessimistic);
        let pess_large = mdp_value(&inst, large, Frontier::Pessimistic);
        let opt_small = mdp_value(&inst, small, Frontier::Optimistic);
        let opt_large = mdp_value(&inst, large, Frontier::Optimistic);
        let sandwich =
            pess_small <= pess_large && pess_large <= opt_large && opt_large <= opt_small;
        let (ok, shown) = if *accepted {
            (pess_small.is_one(), pess_small)
        } else {
            let limit = serial_no_instance_bound(&f, &g, m, large);
            (opt_large <= limit, opt_large)
        };
        tally.check(ok && sandwich, || {
            format!(
                "accepted={accepted} truth {truth:?} value {shown} sandwich {sandwich}\n{}",
                crate::text::write_nfa(a)
            )
        });
    }
    require_balance(&mut tally, &instances, per_answer);
    tally.finish()
}

// ---------------------------------------------------------------------------
// Engine honesty

/// Raising the three-valued bound never flips a definite verdict. Checked
/// on every configuration below the smaller bound, for formulas and nets
/// drawn from all CTL suites.
pub fn honesty(fig: &Ocp) -> SuiteReport {
    let mut tally = Tally::new("honesty");
    let check = |tally: &mut Tally, label: String, ocp: &Ocp, phi: &Ctl, b: usize| {
        let lo = evaluate_three_valued(ocp, phi, b);
        let hi = evaluate_three_valued(ocp, phi, 2 * b);
        let mut flip = None;
        for q in ocp.locations() {
            for n in 0..=b {
                let (x, y) = (lo.value(q, n), hi.value(q, n));
                if x != ThreeValued::Unknown && y != ThreeValued::Unknown && x != y {
                    flip.get_or_insert((q, n));
                }
            }
        }
        tally.check(flip.is_none(), || {
            let (q, n) = flip.expect("set");
            format!("{label}: ({}, {n}) flips between {b} and {}", ocp.name(q), 2 * b)
        });
    };
    for i in 1..=6 {
        check(&mut tally, format!("phi_{i}"), fig, &phi_div(i), 512);
        check(&mut tally, format!("psi_{i}"), fig, &psi_bit(i), 512);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x404e);
    for j in 0..100 {
        let ocp = random_ocp(&mut rng, 3);
        let phi = random_core_ctl(&mut rng, 9);
        let b = 8 + rng.gen_range(0..64);
        check(&mut tally, format!("random #{j} {phi}"), &ocp, &phi, b);
    }
    for text in ["exists a forall b : a & ~b | b", "forall a exists b exists c : a & (b | c)"] {
        let alpha = crate::gadgets::qbf::parse_qbf(text).expect("valid");
        let theta = qbf_reduce(&alpha).expect("valid");
        check(&mut tally, text.into(), &figure7(), &theta, 32);
    }
    let primes = [2u64, 3, 5];
    for f in random_family(&mut rng, &primes, 10) {
        let g = ocn_of_crr_formula(&f, &primes).expect("valid");
        let (ocp, goal) = exit_goal(&g).expect("formula nets have an exit");
        check(&mut tally, format!("net of {f}"), &ocp, &goal, 30);
    }
    for c in all_small_circuits().iter().step_by(97) {
        let g = ocn_of_circuit(c, &[2, 3]).expect("valid");
        check(&mut tally, "circuit".into(), &g.ocp, &ef_of_circuit(c), 6);
    }
    let psi = crate::gadgets::formula::parse_bool_formula("x1 | x2").expect("valid");
    let w = wagner_reduce(&psi, 2).expect("valid");
    check(&mut tally, "lex-max x1 | x2".into(), &w.ocp, &w.goal, w.bound());
    let a = random_nfa(&mut rng, 3);
    let f = crr_formula_of_predicate(&[true, false, true, true], &[2, 3], 2).expect("valid");
    let g = crr_equals_formula(&[2, 3], &BigUint::from(4u32));
    for variant in [SerialVariant::Until, SerialVariant::Globally] {
        let inst = serial_compose(&a, &f, &g, &[2, 3], variant).expect("valid");
        check(&mut tally, format!("serial {variant:?}"), &inst.ocp, &inst.goal, 8);
    }
    tally.finish()
}

fn random_family(rng: &mut impl Rng, primes: &[u64], count: usize) -> Vec<CrrFormula> {
    let vars = crr_vars(primes);
    (0..count).map(|_| random_formula(rng, &vars, 12)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::fig7::{labelled_ocp, FIG7_POSITIVE, FIG7_ZERO};

    #[test]
    fn enumeration_counts() {
        // 1, 2, 3 variables: sizes up to 5.
        assert_eq!(enumerate_formulas(&[1usize], 5).len(), 4);
        assert_eq!(enumerate_formulas(&[1usize, 2], 5).len(), 24);
        assert_eq!(enumerate_formulas(&[1usize, 2, 3], 5).len(), 72);
        for f in enumerate_formulas(&[1usize, 2], 7) {
            assert!(f.size() <= 7);
        }
    }

    #[test]
    fn random_formulas_respect_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let f = random_formula(&mut rng, &[1usize, 2, 3], 12);
            assert!(f.size() <= 12, "{f}");
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(lemma2(&figure7(), 3, 40).ok());
        assert!(lemma4(&figure7(), 3, 40).ok());
        assert!(fact14(200, 6).ok());
        let r = qbf(2, 5);
        assert!(r.ok(), "{r}");
        assert!(periodicity(20, 3).passed == 20);
    }

    #[test]
    fn broken_figure_is_caught() {
        // Drop the decrement that closes the q-cycle.
        let positive: Vec<_> = FIG7_POSITIVE
            .iter()
            .copied()
            .filter(|&t| t != ("q3", -1, "q0"))
            .collect();
        let broken = labelled_ocp(&FIG7_ZERO, &positive);
        let report = lemma2(&broken, 3, 40);
        assert!(!report.ok());
        assert!(report.first_failure.unwrap().starts_with("i="));
    }

    #[test]
    fn circuits_enumerated() {
        let all = all_small_circuits();
        assert!(all.iter().all(|c| c.is_connected() && c.num_gates() <= 6 && c.depth() <= 2));
        assert!(all.len() > 100);
    }
}
