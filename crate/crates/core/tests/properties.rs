//! Randomized invariants over small processes, formulas and automata.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use onecounter::checker::{check, evaluate_periodic, evaluate_three_valued};
use onecounter::ctl::{parse, Ctl};
use onecounter::gadgets::{eliminate_negations, CrrFormula, CrrVar};
use onecounter::nfa::{Nfa, NfaBuilder};
use onecounter::ocmdp::{
    almost_sure_reach, bellman_residual, complete_wellformed, exact_max_reach_values,
    induced_finite_mdp, parse_ocmdp, write_ocmdp, Frontier, OcMdp, OcMdpBuilder,
};
use onecounter::text::{parse_nfa, parse_ocp, write_nfa, write_ocp};
use onecounter::{arith, LocId, Ocp, OcpBuilder};

/// (source, positive side, delta, target)
type Edge = (usize, bool, i64, usize);

fn edges(k: usize) -> impl Strategy<Value = Vec<Edge>> {
    prop::collection::vec((0..k, any::<bool>(), -1i64..=1, 0..k), 0..14)
}

fn ocp_of(k: usize, edges: &[Edge], labels: &[(usize, bool)]) -> Ocp {
    let mut b = OcpBuilder::new();
    let locs: Vec<LocId> = (0..k).map(|i| b.location(&format!("l{i}"))).collect();
    for &(q, which) in labels {
        b.label(if which { "p" } else { "q" }, locs[q]);
    }
    for &(s, positive, d, t) in edges {
        if positive {
            b.pos(locs[s], d, locs[t]).unwrap();
        } else {
            b.zero(locs[s], d.max(0), locs[t]).unwrap();
        }
    }
    b.build().unwrap()
}

fn arb_ocp() -> impl Strategy<Value = Ocp> {
    (1usize..=4)
        .prop_flat_map(|k| {
            (
                Just(k),
                edges(k),
                prop::collection::vec((0..k, any::<bool>()), 0..6),
            )
        })
        .prop_map(|(k, e, l)| ocp_of(k, &e, &l))
}

fn arb_ctl() -> impl Strategy<Value = Ctl> {
    let leaf = prop_oneof![
        Just(Ctl::True),
        Just(Ctl::False),
        Just(Ctl::atom("p")),
        Just(Ctl::atom("q")),
    ];
    leaf.prop_recursive(4, 14, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Ctl::not),
            inner.clone().prop_map(Ctl::ex),
            inner.clone().prop_map(Ctl::ax),
            inner.clone().prop_map(Ctl::ef),
            inner.clone().prop_map(Ctl::eg),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.implies(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.eu(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.ew(b)),
        ]
    })
}

fn arb_nfa() -> impl Strategy<Value = Nfa> {
    (1usize..=4)
        .prop_flat_map(|k| {
            (
                Just(k),
                prop::collection::vec((0..k, any::<bool>(), 0..k), 0..10),
                prop::collection::vec(0..k, 0..3),
            )
        })
        .prop_map(|(k, trans, finals)| {
            let mut b = NfaBuilder::new();
            let s: Vec<usize> = (0..k).map(|i| b.state(&format!("s{i}"))).collect();
            b.initial(s[0]);
            for f in finals {
                b.accepting(s[f]);
            }
            for (x, bit, y) in trans {
                b.transition(s[x], bit, s[y]);
            }
            b.build().unwrap()
        })
}

/// Random OC-MDP with uniform distributions on probabilistic sides; the
/// first location is the target.
fn arb_mdp() -> impl Strategy<Value = OcMdp> {
    (1usize..=4)
        .prop_flat_map(|k| (Just(k), edges(k), prop::collection::vec(any::<bool>(), k)))
        .prop_map(|(k, e, prob)| {
            let unique: BTreeSet<Edge> = e
                .into_iter()
                .map(|(s, pos, d, t)| (s, pos, if pos { d } else { d.max(0) }, t))
                .collect();
            let mut b = OcMdpBuilder::new();
            let locs: Vec<LocId> = (0..k)
                .map(|i| {
                    let name = format!("l{i}");
                    if prob[i] {
                        b.prob(&name)
                    } else {
                        b.nondet(&name)
                    }
                })
                .collect();
            for &(s, pos, d, t) in &unique {
                let p = prob[s].then(|| {
                    let width = unique.iter().filter(|e| e.0 == s && e.1 == pos).count();
                    BigRational::new(1.into(), width.into())
                });
                if pos {
                    b.pos(locs[s], d, locs[t], p).unwrap();
                } else {
                    b.zero(locs[s], d, locs[t], p).unwrap();
                }
            }
            complete_wellformed(&b.build().unwrap()).0
        })
}

fn arb_crr_formula(primes: Vec<u64>) -> impl Strategy<Value = CrrFormula> {
    let vars: Vec<CrrVar> = primes
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..p).map(move |r| CrrVar { i: i + 1, r }))
        .collect();
    let leaf = prop::sample::select(vars).prop_map(CrrFormula::var);
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(CrrFormula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.or(b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ctl_display_round_trips(phi in arb_ctl()) {
        let again = parse(&phi.to_string()).unwrap();
        prop_assert_eq!(again.size(), phi.size());
        prop_assert_eq!(again.lud(), phi.lud());
        prop_assert_eq!(again, phi);
    }

    #[test]
    fn ocp_text_round_trips(ocp in arb_ocp()) {
        let text = write_ocp(&ocp);
        prop_assert_eq!(parse_ocp(&text).unwrap(), ocp);
    }

    #[test]
    fn nfa_text_round_trips(a in arb_nfa(), word in prop::collection::vec(any::<bool>(), 0..8)) {
        let b = parse_nfa(&write_nfa(&a)).unwrap();
        prop_assert_eq!(b.accepts(&word), a.accepts(&word));
        prop_assert_eq!(b, a);
    }

    #[test]
    fn ocmdp_text_round_trips(a in arb_mdp()) {
        let targets = vec![a.ocp().locations().next().unwrap()];
        let (b, t) = parse_ocmdp(&write_ocmdp(&a, &targets)).unwrap();
        prop_assert_eq!(t, targets);
        prop_assert_eq!(b, a);
    }

    #[test]
    fn negation_handling_preserves_meaning(
        (primes, f) in (1usize..=3).prop_flat_map(|m| {
            let primes = arith::primes_first(m);
            (Just(primes.clone()), arb_crr_formula(primes))
        })
    ) {
        let pushed = f.push_negations();
        let free = eliminate_negations(&f, &primes).unwrap();
        prop_assert!(free.is_negation_free());
        let modulus: u64 = primes.iter().product();
        for m in 0..modulus {
            let a = arith::crr(&primes, &BigUint::from(m)).unwrap();
            prop_assert_eq!(pushed.eval_crr(&a), f.eval_crr(&a));
            prop_assert_eq!(free.eval_crr(&a), f.eval_crr(&a));
        }
    }

    #[test]
    fn periodic_tables_repeat_and_agree_with_bounded_evaluation(
        ocp in arb_ocp(),
        phi in arb_ctl(),
        offset in 1u64..40,
    ) {
        let Ok(table) = evaluate_periodic(&ocp, &phi) else {
            return Ok(());
        };
        let t = table.params().threshold().clone();
        let k = table.params().period().clone();
        let n = &t + offset;
        let small: Option<usize> = (&t + &k + 40u32).try_into().ok().filter(|&b: &usize| b <= 4096);
        let tv = small.map(|b| evaluate_three_valued(&ocp, &phi, b));
        for q in ocp.locations() {
            prop_assert_eq!(table.holds(q, &n), table.holds(q, &(&n + &k)));
            let rep = table.params().representative(&(&n + &k * 1000u32));
            prop_assert_eq!(
                check(&ocp, &phi, q, &(&n + &k * 1000u32)).unwrap(),
                table.holds(q, &rep)
            );
            if let Some(tv) = &tv {
                for m in 0..=tv_bound(&t, &k) {
                    if let Some(v) = tv.value(q, m).definite() {
                        prop_assert_eq!(v, table.holds(q, &BigUint::from(m)), "q={:?} n={}", q, m);
                    }
                }
            }
        }
    }

    #[test]
    fn mdp_values_are_consistent(a in arb_mdp(), n in 0usize..3, bound in 2usize..5) {
        let start = a.ocp().locations().last().unwrap();
        let target = a.ocp().locations().next().unwrap();
        let mut at_start = Vec::new();
        for (frontier, b) in [
            (Frontier::Pessimistic, bound),
            (Frontier::Pessimistic, bound + 1),
            (Frontier::Optimistic, bound),
        ] {
            let fin = induced_finite_mdp(&a, (start, n), b, frontier).unwrap();
            let t = fin.targets(&[target]);
            let values = exact_max_reach_values(&fin, &t).unwrap();
            prop_assert!(bellman_residual(&fin, &t, &values).is_zero());
            let sure = almost_sure_reach(&fin, &t);
            for v in 0..fin.num_vertices() {
                let x = values.value(v);
                prop_assert!(!x.is_negative() && x <= &BigRational::one());
                prop_assert_eq!(sure.contains(v), x.is_one(), "vertex {}", v);
            }
            at_start.push(values.value(fin.vertex(start, n).unwrap()).clone());
        }
        prop_assert!(at_start[0] <= at_start[1]);
        prop_assert!(at_start[0] <= at_start[2]);
    }
}

/// Counter values below which the bounded evaluation is compared.
fn tv_bound(t: &BigUint, k: &BigUint) -> usize {
    usize::try_from(t + k).unwrap().min(64)
}
