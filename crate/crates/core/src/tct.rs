//! Minimal sets, traces and type labels of prime quotients.

use std::collections::BTreeSet;

use crate::algebra::{FiniteAlgebra, TupleCodec};
use crate::budget::{ClosureBudget, Completeness, Search};
use crate::clone::{
    idempotent_power, interpolation_closure, leaf_term, seeded, unary_polynomial_clone, Interpolant, OperationSet,
    PartialDomain, WitnessedOperation,
};
use crate::closure::{CloseOutcome, Prepared, StopWhen};
use crate::commutator::MatrixClosure;
use crate::congruence::{Congruence, Translations, UnionFind};
use crate::error::{Error, Result};
use crate::Elem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalSet {
    /// Sorted elements of the set.
    pub elements: Vec<Elem>,
    /// A separating unary polynomial with this range.
    pub witness: WitnessedOperation,
    /// An idempotent unary polynomial with this range, when one was found.
    pub idempotent: Option<WitnessedOperation>,
}

#[derive(Debug, Clone)]
pub struct MinimalSets {
    /// Sorted by elements.
    pub sets: Vec<MinimalSet>,
    pub completeness: Completeness,
    /// Sets returned without an idempotent witness.
    pub warnings: Vec<String>,
}

/// Checks `α ≺ β`: every pair of `β` outside `α` generates `β` over `α`.
pub fn check_covering(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<()> {
    if !alpha.leq(beta) || alpha == beta {
        return Err(Error::Precondition("expected α < β".into()));
    }
    let tr = Translations::new(alg)?;
    for (a, b) in beta.pairs() {
        if a < b && !alpha.related(a, b) && &tr.generate(Some(alpha), &[(a, b)]) != beta {
            return Err(Error::Precondition("the pair of congruences is not a covering".into()));
        }
    }
    Ok(())
}

fn separates(f: &[Elem], alpha: &Congruence, beta_pairs: &[(Elem, Elem)]) -> bool {
    beta_pairs
        .iter()
        .any(|&(a, b)| !alpha.related(f[a as usize], f[b as usize]))
}

fn beta_minus_alpha(alpha: &Congruence, beta: &Congruence) -> Vec<(Elem, Elem)> {
    beta.pairs()
        .into_iter()
        .filter(|&(a, b)| a < b && !alpha.related(a, b))
        .collect()
}

fn is_idempotent(f: &[Elem]) -> bool {
    f.iter().all(|&y| f[y as usize] == y)
}

/// The `⟨α, β⟩`-minimal sets, given the unary polynomials.
pub fn minimal_sets_from(unary: &OperationSet, alpha: &Congruence, beta: &Congruence) -> MinimalSets {
    let pairs = beta_minus_alpha(alpha, beta);
    let separating: Vec<&WitnessedOperation> = unary
        .operations
        .iter()
        .filter(|f| separates(&f.table, alpha, &pairs))
        .collect();
    let ranges: BTreeSet<Vec<Elem>> = separating.iter().map(|f| f.image()).collect();
    let minimal: Vec<&Vec<Elem>> = ranges
        .iter()
        .filter(|r| {
            !ranges
                .iter()
                .any(|s| s.len() < r.len() && s.iter().all(|x| r.binary_search(x).is_ok()))
        })
        .collect();
    let mut warnings = Vec::new();
    let mut sets = Vec::new();
    for r in minimal {
        let witness = separating
            .iter()
            .find(|f| &f.image() == r)
            .map(|f| (*f).clone())
            .expect("range comes from a separating polynomial");
        let idempotent = unary
            .operations
            .iter()
            .find(|f| is_idempotent(&f.table) && &f.image() == r)
            .cloned()
            .or_else(|| {
                let e = idempotent_power(&witness);
                (&e.image() == r).then_some(e)
            });
        if idempotent.is_none() {
            warnings.push(format!("no idempotent polynomial with range {r:?}"));
        }
        sets.push(MinimalSet {
            elements: r.clone(),
            witness,
            idempotent,
        });
    }
    MinimalSets {
        sets,
        completeness: unary.completeness,
        warnings,
    }
}

pub fn minimal_sets(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence, budget: &ClosureBudget) -> Result<MinimalSets> {
    check_covering(alg, alpha, beta)?;
    let unary = unary_polynomial_clone(alg, budget)?;
    Ok(minimal_sets_from(&unary, alpha, beta))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceReport {
    pub traces: Vec<Vec<Elem>>,
    pub body: Vec<Elem>,
    pub tail: Vec<Elem>,
}

pub fn traces_and_body(alpha: &Congruence, beta: &Congruence, set: &[Elem]) -> Result<TraceReport> {
    if !alpha.leq(beta) || alpha == beta {
        return Err(Error::Precondition("expected α < β".into()));
    }
    let mut traces = Vec::new();
    for block in beta.blocks() {
        let part: Vec<Elem> = block.into_iter().filter(|x| set.binary_search(x).is_ok()).collect();
        let classes: BTreeSet<Elem> = part.iter().map(|&x| alpha.class_of(x)).collect();
        if classes.len() >= 2 {
            traces.push(part);
        }
    }
    let mut body: Vec<Elem> = traces.iter().flatten().copied().collect();
    body.sort_unstable();
    let tail = set.iter().copied().filter(|x| body.binary_search(x).is_err()).collect();
    Ok(TraceReport { traces, body, tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeLabel {
    One,
    Two,
    NonabelianFamily,
    Unknown,
}

impl TypeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeLabel::One => "1",
            TypeLabel::Two => "2",
            TypeLabel::NonabelianFamily => "nonabelian",
            TypeLabel::Unknown => "unknown",
        }
    }
}

/// The evidence behind a type label.
#[derive(Debug, Clone)]
pub struct TypeReport {
    pub label: TypeLabel,
    pub minimal_set: Vec<Elem>,
    pub trace: Vec<Elem>,
    /// Whether `C(β, β; α)` holds.
    pub abelian_quotient: bool,
    /// A polynomial that is Maltsev modulo `α` on the trace.
    pub maltsev: Option<Interpolant>,
    /// A trace polynomial modulo `α` depending on two variables, when found.
    pub essential_binary: Option<WitnessedOperation>,
    /// Set when the essentially-unary test stopped at its arity or budget.
    pub budget_limited: bool,
}

/// Arity up to which induced trace polynomials are checked to be essentially
/// unary.
pub const ESSENTIAL_ARITY_CAP: usize = 3;

pub fn type_of(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence, budget: &ClosureBudget) -> Result<TypeReport> {
    let sets = minimal_sets(alg, alpha, beta, budget)?;
    type_from_sets(alg, alpha, beta, &sets, budget)
}

pub fn type_from_sets(
    alg: &FiniteAlgebra,
    alpha: &Congruence,
    beta: &Congruence,
    sets: &MinimalSets,
    budget: &ClosureBudget,
) -> Result<TypeReport> {
    let abelian_quotient = MatrixClosure::new(alg, beta, beta)?.centralizes_modulo(alpha);
    let Some(first) = sets.sets.first() else {
        return Ok(TypeReport {
            label: TypeLabel::Unknown,
            minimal_set: Vec::new(),
            trace: Vec::new(),
            abelian_quotient,
            maltsev: None,
            essential_binary: None,
            budget_limited: true,
        });
    };
    let (trace, q, proj, classes, maltsev) = trace_maltsev(alg, alpha, beta, &first.elements, budget)?;
    let mut report = TypeReport {
        label: TypeLabel::Unknown,
        minimal_set: first.elements.clone(),
        trace,
        abelian_quotient,
        maltsev: None,
        essential_binary: None,
        budget_limited: !sets.completeness.is_complete(),
    };
    match maltsev {
        Search::Found(m) => {
            report.maltsev = Some(m);
            report.label = if abelian_quotient {
                TypeLabel::Two
            } else {
                TypeLabel::NonabelianFamily
            };
            return Ok(report);
        }
        Search::Unknown => return Ok(report),
        Search::NotFound => {}
    }
    let e = match &first.idempotent {
        Some(e) => e,
        None => return Ok(report),
    };
    let reps = alpha.representatives();
    let e_mod: Vec<Elem> = reps.iter().map(|&r| proj[e.at(r) as usize]).collect();
    let mut complete = sets.completeness.is_complete();
    for k in 2..=ESSENTIAL_ARITY_CAP {
        match essential_trace_operation(&q, &classes, &e_mod, k, budget)? {
            Search::Found(op) => {
                report.essential_binary = Some(op);
                report.label = TypeLabel::NonabelianFamily;
                return Ok(report);
            }
            Search::Unknown => complete = false,
            Search::NotFound => {}
        }
    }
    report.budget_limited = true;
    report.label = if complete { TypeLabel::One } else { TypeLabel::Unknown };
    Ok(report)
}

/// The first trace of `set`, the quotient by `α` with its projection, the
/// trace classes in the quotient, and the search for a polynomial that is
/// Maltsev modulo `α` on the trace.
#[allow(clippy::type_complexity)]
pub(crate) fn trace_maltsev(
    alg: &FiniteAlgebra,
    alpha: &Congruence,
    beta: &Congruence,
    set: &[Elem],
    budget: &ClosureBudget,
) -> Result<(Vec<Elem>, FiniteAlgebra, Vec<Elem>, Vec<Elem>, Search<Interpolant>)> {
    let traces = traces_and_body(alpha, beta, set)?;
    let trace = traces.traces[0].clone();
    let (q, proj) = alg.quotient(alpha)?;
    let mut classes: Vec<Elem> = trace.iter().map(|&x| proj[x as usize]).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut constraints = Vec::new();
    for &a in &classes {
        for &b in &classes {
            constraints.push((vec![a, b, b], a));
            constraints.push((vec![b, b, a], a));
        }
    }
    let domain = PartialDomain::from_constraints(3, constraints)?.expect("cross constraints are consistent");
    let maltsev = interpolation_closure(&q, &domain, true, budget)?;
    Ok((trace, q, proj, classes, maltsev))
}

/// Looks for a `k`-ary polynomial of `q` that maps `trace^k` into the trace
/// after applying `e` and depends on at least two variables there.
fn essential_trace_operation(
    q: &FiniteAlgebra,
    trace: &[Elem],
    e: &[Elem],
    k: usize,
    budget: &ClosureBudget,
) -> Result<Search<WitnessedOperation>> {
    let t = trace.len();
    let codec = TupleCodec::new(t, k);
    let n = codec.len().ok_or_else(|| Error::Precondition("trace domain too large".into()))?;
    let points: Vec<Vec<Elem>> = (0..n)
        .map(|i| codec.decode(i).into_iter().map(|j| trace[j as usize]).collect())
        .collect();
    let prep = Prepared::new(q);
    let mut sp = seeded(&prep, &points, k, true, true);
    let outcome = sp.close(budget, &StopWhen::default());
    let depends_on = |v: &[Elem], var: usize| {
        let mut idx = vec![0; k];
        (0..n).any(|i| {
            codec.decode_into(i, &mut idx);
            let orig = idx[var];
            (0..t as Elem).any(|alt| {
                idx[var] = alt;
                let j = codec.encode(&idx);
                idx[var] = orig;
                v[i] != v[j]
            })
        })
    };
    for id in 0..sp.len() {
        let v: Vec<Elem> = sp.vector(id).iter().map(|&x| e[x as usize]).collect();
        if v.iter().any(|x| trace.binary_search(x).is_err()) {
            continue;
        }
        if (0..k).filter(|&var| depends_on(&v, var)).count() >= 2 {
            let inner = sp.term(id, &leaf_term(k));
            return Ok(Search::Found(WitnessedOperation {
                arity: k,
                table: v,
                witness: inner,
            }));
        }
    }
    Ok(if outcome == CloseOutcome::Exhausted {
        Search::Unknown
    } else {
        Search::NotFound
    })
}

/// Groups minimal sets into polynomial-isomorphism classes; returns the index
/// lists of the classes.
pub fn polynomial_isomorphism_classes(unary: &OperationSet, sets: &[Vec<Elem>]) -> Vec<Vec<usize>> {
    let n = sets.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if sets[i] == sets[j] || isomorphic(unary, &sets[i], &sets[j]) {
                uf.union(i as Elem, j as Elem);
            }
        }
    }
    let c = uf.into_congruence();
    c.blocks()
        .into_iter()
        .map(|b| b.into_iter().map(|x| x as usize).collect())
        .collect()
}

fn isomorphic(unary: &OperationSet, u: &[Elem], v: &[Elem]) -> bool {
    if u.len() != v.len() {
        return false;
    }
    let restrict = |f: &WitnessedOperation, s: &[Elem]| -> Vec<Elem> { s.iter().map(|&x| f.at(x)).collect() };
    let on_v: BTreeSet<Vec<Elem>> = unary.operations.iter().map(|g| restrict(g, v)).collect();
    unary.operations.iter().any(|f| {
        let img = restrict(f, u);
        let mut sorted = img.clone();
        sorted.sort_unstable();
        if sorted != v {
            return false;
        }
        // g restricted to V must invert f restricted to U
        let inverse: Vec<Elem> = v
            .iter()
            .map(|y| u[img.iter().position(|z| z == y).expect("bijective")])
            .collect();
        on_v.contains(&inverse)
    })
}

/// Ranges of idempotent unary polynomials, sorted, with one idempotent each.
pub fn neighborhoods(unary: &OperationSet) -> Vec<(Vec<Elem>, WitnessedOperation)> {
    let mut out: Vec<(Vec<Elem>, WitnessedOperation)> = Vec::new();
    let mut seen = BTreeSet::new();
    for f in &unary.operations {
        if is_idempotent(&f.table) {
            let r = f.image();
            if seen.insert(r.clone()) {
                out.push((r, f.clone()));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::congruence::{congruence_lattice, principal_congruence};

    fn a_congruences() -> (FiniteAlgebra, Congruence, Congruence, Congruence) {
        let a = catalog::example_a();
        let beta = principal_congruence(&a, 0, 1).unwrap();
        let gamma = Congruence::from_blocks(8, &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let delta = Congruence::from_blocks(8, &[vec![0, 2], vec![1, 3], vec![4, 6], vec![5, 7]]);
        (a, beta, gamma, delta)
    }

    #[test]
    fn two_element_minimal_set_is_everything() {
        for alg in [catalog::z2_group(), catalog::two_element_lattice()] {
            let s = minimal_sets(&alg, &Congruence::identity(2), &Congruence::full(2), &ClosureBudget::default()).unwrap();
            assert_eq!(s.sets.len(), 1);
            assert_eq!(s.sets[0].elements, vec![0, 1]);
            let t = traces_and_body(&Congruence::identity(2), &Congruence::full(2), &[0, 1]).unwrap();
            assert_eq!(t.traces, vec![vec![0, 1]]);
            assert!(t.tail.is_empty());
        }
    }

    #[test]
    fn two_element_types() {
        let zero = Congruence::identity(2);
        let one = Congruence::full(2);
        let b = ClosureBudget::default();
        assert_eq!(type_of(&catalog::z2_group(), &zero, &one, &b).unwrap().label, TypeLabel::Two);
        let lat = type_of(&catalog::two_element_lattice(), &zero, &one, &b).unwrap();
        assert_eq!(lat.label, TypeLabel::NonabelianFamily);
        assert!(lat.maltsev.is_none());
        assert_eq!(type_of(&catalog::two_element_bare_set(), &zero, &one, &b).unwrap().label, TypeLabel::One);
    }

    #[test]
    fn non_covering_rejected() {
        let (a, _, gamma, _) = a_congruences();
        let zero = Congruence::identity(8);
        assert!(minimal_sets(&a, &zero, &gamma, &ClosureBudget::default()).is_err());
        assert!(minimal_sets(&a, &gamma, &gamma, &ClosureBudget::default()).is_err());
    }

    #[test]
    fn witnesses_separate_and_sets_are_minimal() {
        let (a, beta, gamma, _) = a_congruences();
        let one = Congruence::full(8);
        let s = minimal_sets(&a, &gamma, &one, &ClosureBudget::default()).unwrap();
        for m in &s.sets {
            assert!(m.witness.verify(&a).unwrap());
            assert_eq!(m.witness.image(), m.elements);
            let e = m.idempotent.as_ref().unwrap();
            assert!(e.verify(&a).unwrap());
            assert_eq!(e.image(), m.elements);
        }
        let s = minimal_sets(&a, &Congruence::identity(8), &beta, &ClosureBudget::default()).unwrap();
        assert!(!s.sets.is_empty());
    }

    #[test]
    fn isomorphism_classes_have_equal_sizes() {
        let a = catalog::example_a_bar();
        let unary = unary_polynomial_clone(&a, &ClosureBudget::default()).unwrap();
        let lat = congruence_lattice(&a, 100).unwrap();
        for &(lo, hi) in lat.covers() {
            let s = minimal_sets_from(&unary, &lat.congruences()[lo], &lat.congruences()[hi]);
            let sets: Vec<Vec<Elem>> = s.sets.iter().map(|m| m.elements.clone()).collect();
            for class in polynomial_isomorphism_classes(&unary, &sets) {
                assert!(class.iter().all(|&i| sets[i].len() == sets[class[0]].len()));
            }
        }
        let one = vec![vec![0, 1]];
        assert_eq!(polynomial_isomorphism_classes(&unary, &one), vec![vec![0]]);
    }
}
