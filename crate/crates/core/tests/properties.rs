use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;

use finalg::commutator::{commutator, strongly_abelian_quotient_exists, CommutatorEngine, QuotientSearch};
use finalg::congruence::{congruence_lattice, generated_congruence};
use finalg::growth::{minimum_generating_size, verify_generating_set, within_general_bounds, DValue};
use finalg::structure::digraph::TranslationDigraph;
use finalg::structure::profile::{condition_profile, ProfileCaps, Verdict};
use finalg::structure::spread::spread_check;
use finalg::{ClosureBudget, Elem, FiniteAlgebra, Limits, Operation, Search, Term, TupleCodec};

/// Algebras on 2 or 3 elements with one unary and one binary operation.
fn small_algebra() -> impl Strategy<Value = FiniteAlgebra> {
    (2usize..=3).prop_flat_map(|n| {
        let e = 0..n as Elem;
        (prop::collection::vec(e.clone(), n), prop::collection::vec(e, n * n)).prop_map(move |(unary, binary)| {
            let ops = vec![Operation::new("f", 1, unary), Operation::new("g", 2, binary)];
            FiniteAlgebra::new("random", n, ops).unwrap()
        })
    })
}

fn term() -> impl Strategy<Value = Arc<Term>> {
    let leaf = prop_oneof![(0usize..4).prop_map(Term::var), (0u32..5).prop_map(Term::constant)];
    leaf.prop_recursive(4, 24, 3, |inner| {
        (prop::sample::select(vec!["f", "g", "+", "∧"]), prop::collection::vec(inner, 1..=3))
            .prop_map(|(s, args)| Term::apply(s, args))
    })
}

fn subset(n: usize) -> impl Strategy<Value = Vec<Elem>> {
    prop::collection::btree_set(0..n as Elem, 0..=n).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codec_round_trip(base in 1usize..6, width in 0usize..5, seed in any::<u64>()) {
        let codec = TupleCodec::new(base, width);
        let i = (seed % codec.len().unwrap() as u64) as usize;
        let t = codec.decode(i);
        prop_assert_eq!(t.len(), width);
        prop_assert!(t.iter().all(|&x| (x as usize) < base));
        prop_assert_eq!(codec.encode(&t), i);
    }

    #[test]
    fn term_parse_round_trip(t in term()) {
        let back: Term = t.to_string().parse().unwrap();
        prop_assert_eq!(back, (*t).clone());
    }

    #[test]
    fn subuniverse_closure(alg in small_algebra(), a in subset(3), b in subset(3)) {
        let n = alg.size() as Elem;
        let a: Vec<Elem> = a.into_iter().filter(|&x| x < n).collect();
        let b: Vec<Elem> = b.into_iter().filter(|&x| x < n).collect();
        let ca = alg.generate_subuniverse(&a).unwrap();
        prop_assert!(a.iter().all(|x| ca.contains(x)));
        prop_assert!(alg.is_subuniverse(&ca));
        prop_assert_eq!(alg.generate_subuniverse(&ca).unwrap(), ca.clone());
        let mut both = a.clone();
        both.extend(&b);
        let cboth = alg.generate_subuniverse(&both).unwrap();
        prop_assert!(ca.iter().all(|x| cboth.contains(x)));
    }

    #[test]
    fn generated_congruences(alg in small_algebra(), x in 0u32..3, y in 0u32..3) {
        let n = alg.size() as Elem;
        let (x, y) = (x % n, y % n);
        let theta = generated_congruence(&alg, &[(x, y)]).unwrap();
        prop_assert!(theta.related(x, y));
        prop_assert!(theta.check_compatible(&alg).is_ok());
        let lat = congruence_lattice(&alg, 1000).unwrap();
        prop_assert!(lat.index_of(&theta).is_some());
        for c in lat.congruences() {
            prop_assert!(c.check_compatible(&alg).is_ok());
            if c.related(x, y) {
                prop_assert!(theta.leq(c));
            }
        }
    }

    #[test]
    fn commutator_below_meet(alg in small_algebra()) {
        let lat = congruence_lattice(&alg, 1000).unwrap();
        for a in lat.congruences() {
            for b in lat.congruences() {
                let c = commutator(&alg, a, b).unwrap();
                prop_assert!(c.leq(&a.meet(b)));
            }
        }
    }

    #[test]
    fn digraph_edges(n in 2usize..=4, table in prop::collection::vec(0u32..4, 16)) {
        // made idempotent on the diagonal
        let op = |args: &[Elem]| {
            if args[0] == args[1] { args[0] } else { table[(args[0] * 4 + args[1]) as usize] % n as Elem }
        };
        let vertices: Vec<Elem> = (0..n as Elem).collect();
        let g = TranslationDigraph::new(&vertices, 2, op).unwrap();
        for &c in &vertices {
            prop_assert!(g.edges.contains(&(c, c)));
            for &d in &vertices {
                prop_assert!(g.edges.contains(&(c, op(&[d, c]))));
                prop_assert!(g.edges.contains(&(c, op(&[c, d]))));
            }
        }
        let reach = |from: Elem| {
            let mut seen = vec![from];
            let mut i = 0;
            while i < seen.len() {
                for &(a, b) in &g.edges {
                    if a == seen[i] && !seen.contains(&b) {
                        seen.push(b);
                    }
                }
                i += 1;
            }
            seen
        };
        match g.unreachable_pair() {
            Some((a, b)) => prop_assert!(!reach(a).contains(&b)),
            None => prop_assert!(vertices.iter().all(|&v| reach(v).len() == n)),
        }
    }

    #[test]
    fn spread_witness_replays(alg in small_algebra(), a in subset(3), b in subset(3)) {
        let n = alg.size() as Elem;
        let family: Vec<Vec<Elem>> = [a, b]
            .into_iter()
            .map(|s| s.into_iter().filter(|&x| x < n).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        prop_assume!(!family.is_empty());
        if let Search::Found(w) = spread_check(&alg, &family, &ClosureBudget::default()).unwrap() {
            prop_assert!(w.replay(&alg).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn growth_monotone_and_bounded(alg in small_algebra()) {
        let mut last = 0;
        for n in 1..=3 {
            let e = minimum_generating_size(&alg, n, &ClosureBudget::default()).unwrap();
            prop_assert!(verify_generating_set(&alg, n, &e.witness).unwrap());
            let DValue::Exact(d) = e.value else {
                return Err(TestCaseError::fail(format!("d({n}) = {}", e.value)));
            };
            prop_assert!(within_general_bounds(alg.size(), n, d));
            prop_assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn quotient_witness_is_strongly_abelian(alg in small_algebra(), n in 1usize..=2) {
        let r = strongly_abelian_quotient_exists(&alg, n, 1000, &Limits::default(), &ClosureBudget::default()).unwrap();
        if let QuotientSearch::Found(theta) = r {
            let power = alg.direct_power(n, &Limits::default()).unwrap();
            let (q, _) = power.quotient(&theta).unwrap();
            prop_assert!(q.size() > 1);
            prop_assert!(CommutatorEngine::new(&q).unwrap().strong_violation().unwrap().is_none());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn profile_respects_implications(alg in small_algebra()) {
        let caps = ProfileCaps {
            growth_n: 3,
            power_cap: 2,
            battery_time: Duration::from_secs(2),
            power_time: Duration::from_secs(5),
            growth_time: Duration::from_secs(10),
            ..ProfileCaps::default()
        };
        let p = condition_profile(&alg, &caps).unwrap();
        prop_assert!(p.implication_violations().is_empty(), "{:?}", p.implication_violations());
        if p.maltsev.is_some() {
            prop_assert_eq!(p.verdict(1), Verdict::Yes);
        }
    }
}
