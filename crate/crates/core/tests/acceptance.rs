//! End-to-end checks on the built-in examples. Each criterion prints one
//! PASS/FAIL line with its running time and limit.

use std::time::{Duration, Instant};

use finalg::commutator::{abelianness_profile, diagonal_collapse, is_abelian, is_strongly_abelian};
use finalg::congruence::{congruence_lattice, principal_congruence, Translations};
use finalg::growth::{
    growth_table, minimum_generating_size, near_constant_count, near_constant_generation_check, within_general_bounds,
    DValue,
};
use finalg::structure::digraph::{solvability_digraph_check, DigraphVerdict};
use finalg::structure::maltsev::{has_maltsev_polynomial, has_maltsev_term, is_maltsev};
use finalg::structure::profile::{condition_profile, ProfileCaps, Verdict};
use finalg::structure::spread::spread_check;
use finalg::tct::{minimal_sets, type_of, TypeLabel};
use finalg::{catalog, ClosureBudget, Congruence, FiniteAlgebra, Search};

type Outcome = Result<(), String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn budget() -> ClosureBudget {
    ClosureBudget::default()
}

fn err(e: finalg::Error) -> String {
    e.to_string()
}

/// The congruences of example_A named by their blocks: the principal one
/// of `(0, 1)`, the two halves, and the parity split.
fn a_named() -> (FiniteAlgebra, Congruence, Congruence, Congruence) {
    let a = catalog::example_a();
    let beta = principal_congruence(&a, 0, 1).expect("principal");
    let gamma = Congruence::from_blocks(8, &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
    let delta = Congruence::from_blocks(8, &[vec![0, 2], vec![1, 3], vec![4, 6], vec![5, 7]]);
    (a, beta, gamma, delta)
}

fn lattices() -> Outcome {
    let (a, beta, gamma, delta) = a_named();
    let lat = congruence_lattice(&a, 1000).map_err(err)?;
    ensure(lat.len() == 5, || format!("example_A has {} congruences", lat.len()))?;
    for c in [&beta, &gamma, &delta] {
        ensure(lat.index_of(c).is_some(), || format!("{c} missing from the lattice"))?;
    }
    ensure(beta.meet(&delta).is_identity(), || "beta meet delta is not 0".into())?;
    let tr = Translations::new(&a).map_err(err)?;
    ensure(tr.join(&beta, &delta) == gamma, || "beta join delta is not gamma".into())?;
    let bar = congruence_lattice(&catalog::example_a_bar(), 1000).map_err(err)?;
    ensure(bar.len() == 4, || format!("example_A_bar has {} congruences", bar.len()))
}

fn types() -> Outcome {
    let (a, beta, gamma, _) = a_named();
    let zero = Congruence::identity(8);
    let one = Congruence::full(8);
    for (lo, hi, want) in [(&zero, &beta, TypeLabel::One), (&beta, &gamma, TypeLabel::Two), (&gamma, &one, TypeLabel::Two)] {
        let got = type_of(&a, lo, hi, &budget()).map_err(err)?.label;
        ensure(got == want, || format!("<{lo}, {hi}> has type {}, expected {}", got.as_str(), want.as_str()))?;
    }
    Ok(())
}

fn minimal_set_counts() -> Outcome {
    let (a, _, gamma, _) = a_named();
    let one = Congruence::full(8);
    let sets = minimal_sets(&a, &gamma, &one, &budget()).map_err(err)?;
    ensure(sets.sets.len() == 4, || format!("example_A: {} minimal sets", sets.sets.len()))?;
    ensure(sets.sets.iter().any(|m| m.elements == [0, 2, 4, 6]), || "{0,2,4,6} is not minimal".into())?;
    let bar = catalog::example_a_bar();
    let lat = congruence_lattice(&bar, 1000).map_err(err)?;
    let coatoms = lat.coatoms();
    ensure(coatoms.len() == 1, || format!("example_A_bar has {} coatoms", coatoms.len()))?;
    let top = &lat.congruences()[coatoms[0]];
    let sets = minimal_sets(&bar, top, &one, &budget()).map_err(err)?;
    ensure(sets.sets.len() == 16, || format!("example_A_bar: {} minimal sets", sets.sets.len()))
}

fn diagonal_quotients() -> Outcome {
    for (alg, size, abelian) in [(catalog::example_a(), 8, true), (catalog::example_a_bar(), 5, false)] {
        let (sq, delta) = diagonal_collapse(&alg).map_err(err)?;
        let (q, _) = sq.quotient(&delta).map_err(err)?;
        ensure(q.size() == size, || format!("{}: quotient of size {}", alg.name(), q.size()))?;
        ensure(is_abelian(&q).map_err(err)? == abelian, || format!("{}: abelian is not {abelian}", alg.name()))?;
    }
    Ok(())
}

fn product_example() -> Outcome {
    let bxc = catalog::example_bxc();
    ensure(is_abelian(&bxc).map_err(err)?, || "example_BxC is not abelian".into())?;
    let m = has_maltsev_polynomial(&bxc, &budget()).map_err(err)?;
    ensure(m.is_not_found(), || format!("Maltsev polynomial search gave {}", if m.is_found() { "found" } else { "unknown" }))?;
    // (1, 0), (0, 0) and (0, 1)
    ensure(bxc.is_subuniverse(&[0, 1, 4]), || "{(v,0),(0,0),(0,v)} is not a subuniverse".into())?;
    let generated = bxc.generate_subuniverse(&[0, 1, 4]).map_err(err)?;
    ensure(generated.len() == 3, || format!("generated subuniverse has {} elements", generated.len()))?;
    let family = vec![vec![0, 4, 8, 12], vec![0, 1, 2, 3]];
    let witness = match spread_check(&bxc, &family, &budget()).map_err(err)? {
        Search::Found(w) => w,
        _ => return Err("{U, W} does not spread".into()),
    };
    let (p, leaves) = witness.polynomial();
    ensure(p.to_string().starts_with("g("), || format!("spread polynomial {p}"))?;
    ensure(leaves.contains(&0) && leaves.contains(&1), || format!("spread uses members {leaves:?}"))?;
    ensure(witness.replay(&bxc).map_err(err)?, || "spread witness does not replay".into())?;
    for alg in [catalog::example_b(), catalog::example_c()] {
        match has_maltsev_term(&alg, &budget()).map_err(err)? {
            Search::Found(m) if is_maltsev(&alg, &m).map_err(err)? => {}
            _ => return Err(format!("{} has no verified Maltsev term", alg.name())),
        }
    }
    Ok(())
}

fn digraph_checker() -> Outcome {
    let lat = catalog::two_element_lattice();
    let check = solvability_digraph_check(&lat, 3, &budget()).map_err(err)?;
    ensure(check.verdict == DigraphVerdict::RefutedNonsolvable, || format!("lattice: {}", check.verdict.as_str()))?;
    let cert = check.certificate.ok_or("no certificate")?;
    ensure(cert.verify(&lat).map_err(err)?, || "certificate does not verify".into())?;
    let (x, y) = cert.unreachable;
    // a pseudo-meet sends the pair to one of its elements and fixes it
    let meet = |u, v| cert.polynomial.eval(&lat, &[u, v, u][..cert.arity]).unwrap_or(u32::MAX);
    ensure(cert.arity >= 2 && meet(x, y) == meet(y, x) && meet(x, y) == x.min(y), || {
        format!("certificate polynomial {} is not a pseudo-meet", cert.polynomial)
    })?;
    for alg in catalog::all() {
        let solvable = abelianness_profile(&alg).map_err(err)?.solvable;
        let check = solvability_digraph_check(&alg, 3, &budget()).map_err(err)?;
        let consistent = check.verdict == DigraphVerdict::ConsistentSolvable;
        ensure(consistent == solvable, || {
            format!("{}: commutator solvable {solvable}, checker {}", alg.name(), check.verdict.as_str())
        })?;
    }
    Ok(())
}

fn near_constant() -> Outcome {
    for alg in [catalog::z2_group(), catalog::z4_group(), catalog::example_b(), catalog::example_c()] {
        for n in 2..=3 {
            let c = near_constant_generation_check(&alg, n, &budget()).map_err(err)?;
            ensure(c.generates, || format!("{} n={n}: closure {} of {}", alg.name(), c.closure_size, c.power_size))?;
            if n == 3 {
                let s = alg.size();
                ensure(c.set_size == s + n * s * (s - 1) && c.set_size == near_constant_count(s, n), || {
                    format!("{}: near-constant set of size {}", alg.name(), c.set_size)
                })?;
            }
        }
    }
    Ok(())
}

fn exact(alg: &FiniteAlgebra, n: usize) -> Result<usize, String> {
    match minimum_generating_size(alg, n, &budget()).map_err(err)?.value {
        DValue::Exact(v) => Ok(v),
        other => Err(format!("{} d({n}) = {other}", alg.name())),
    }
}

fn growth_identities() -> Outcome {
    for alg in [catalog::z2_group(), catalog::two_element_lattice()] {
        let sq = alg.direct_power(2, &Default::default()).map_err(err)?;
        let (lhs, rhs) = (exact(&sq, 1)?, exact(&alg, 2)?);
        ensure(lhs == rhs, || format!("{}: d of the square at 1 is {lhs}, d(2) is {rhs}", alg.name()))?;
    }
    let a = catalog::example_a();
    let lat = congruence_lattice(&a, 1000).map_err(err)?;
    for n in 1..=2 {
        let da = exact(&a, n)?;
        for theta in lat.congruences() {
            let (q, _) = a.quotient(theta).map_err(err)?;
            let dq = exact(&q, n)?;
            ensure(dq <= da, || format!("example_A/{theta}: d({n}) = {dq} > {da}"))?;
        }
    }
    let z2 = catalog::z2_group();
    let expanded = z2.constant_expansion();
    let (d1, d2, e2) = (exact(&z2, 1)?, exact(&z2, 2)?, exact(&expanded, 2)?);
    ensure(d2 - d1 <= e2 && e2 <= d2, || format!("z2: d(2) = {d2}, d(1) = {d1}, expanded d(2) = {e2}"))
}

fn bounds() -> Outcome {
    let mut checked = 0;
    for alg in catalog::all() {
        let report = growth_table(&alg, 4, 256, None, &budget()).map_err(err)?;
        for e in &report.entries {
            if let DValue::Exact(v) = e.value {
                ensure(within_general_bounds(alg.size(), e.n, v), || format!("{} d({}) = {v}", alg.name(), e.n))?;
                checked += 1;
            }
        }
    }
    ensure(checked >= 30, || format!("only {checked} exact values"))
}

fn strong_abelianness() -> Outcome {
    let bare = catalog::two_element_bare_set();
    ensure(is_strongly_abelian(&bare).map_err(err)?, || "bare set is not strongly abelian".into())?;
    for (n, want) in [(1, 2), (2, 4), (3, 8)] {
        let d = exact(&bare, n)?;
        ensure(d == want, || format!("bare set d({n}) = {d}"))?;
    }
    ensure(!is_strongly_abelian(&catalog::z4_group()).map_err(err)?, || "z4 is strongly abelian".into())
}

fn implication_audit() -> Outcome {
    let caps = ProfileCaps::default();
    for alg in catalog::all() {
        let p = condition_profile(&alg, &caps).map_err(err)?;
        let violations = p.implication_violations();
        ensure(violations.is_empty(), || format!("{}: violated {violations:?}", alg.name()))?;
        if alg.name() == "example_BxC" {
            ensure(p.verdict(3) == Verdict::Yes && p.verdict(1) == Verdict::No, || {
                format!("example_BxC: (i) {}, (iii) {}", p.verdict(1).as_str(), p.verdict(3).as_str())
            })?;
        }
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("congruence lattices", lattices, 10),
        ("type labels", types, 60),
        ("minimal set counts", minimal_set_counts, 120),
        ("diagonal quotients", diagonal_quotients, 120),
        ("product example", product_example, 60),
        ("translation digraph checker", digraph_checker, 120),
        ("near-constant generation", near_constant, 30),
        ("growth identities", growth_identities, 120),
        ("general bounds", bounds, 120),
        ("strong abelianness", strong_abelianness, 30),
        ("implication audit", implication_audit, 600),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let limit = Duration::from_secs(*limit);
        let outcome = outcome.and_then(|()| ensure(took <= limit, || format!("over the {}s limit", limit.as_secs())));
        match &outcome {
            Ok(()) => println!("PASS {:>2} {name} ({:.2}s, limit {}s)", k + 1, took.as_secs_f64(), limit.as_secs()),
            Err(why) => {
                println!("FAIL {:>2} {name} ({:.2}s, limit {}s): {why}", k + 1, took.as_secs_f64(), limit.as_secs());
                failed.push(k + 1);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria {failed:?}");
        std::process::exit(1);
    }
}
