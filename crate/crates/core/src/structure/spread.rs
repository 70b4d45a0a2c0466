//! Spreads: `A = p(U₁,…,U_k)` for a polynomial `p` and members `U_i` of a
//! family of subsets.
//!
//! The search closes the family and all singletons under setwise application
//! of the basic operations. Setwise application is monotone, so a set that is
//! contained in another derived set can be dropped without losing any way of
//! reaching the whole universe; only a `⊆`-antichain is kept. A proof sketch is
//! in `docs/spread.md`.

use std::collections::BTreeMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::algebra::FiniteAlgebra;
use crate::budget::{ClosureBudget, Completeness, Search};
use crate::clone::unary_polynomial_clone;
use crate::commutator::MatrixClosure;
use crate::congruence::congruence_lattice;
use crate::error::{Error, Result};
use crate::tct::{minimal_sets_from, trace_maltsev};
use crate::term::Term;
use crate::Elem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpreadStep {
    /// The family member with this index.
    Member(usize),
    Singleton(Elem),
    Apply { op: String, args: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadNode {
    pub set: Vec<Elem>,
    pub step: SpreadStep,
}

/// A derivation of the universe. Arguments of a node always come before it;
/// the last node is the universe.
#[derive(Debug, Clone)]
pub struct SpreadWitness {
    pub family: Vec<Vec<Elem>>,
    pub nodes: Vec<SpreadNode>,
}

fn setwise(alg: &FiniteAlgebra, op: usize, args: &[&[Elem]], work: &mut u64) -> FixedBitSet {
    let n = alg.size();
    let operation = &alg.operations()[op];
    let mut out = FixedBitSet::with_capacity(n);
    let k = args.len();
    if k == 0 {
        out.insert(operation.apply(&[], n) as usize);
        return out;
    }
    if args.iter().any(|a| a.is_empty()) {
        return out;
    }
    let mut idx = vec![0usize; k];
    let mut tuple: Vec<Elem> = args.iter().map(|a| a[0]).collect();
    loop {
        out.insert(operation.apply(&tuple, n) as usize);
        *work += 1;
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < args[i].len() {
                tuple[i] = args[i][idx[i]];
                break;
            }
            idx[i] = 0;
            tuple[i] = args[i][0];
        }
    }
}

fn elements(bits: &FixedBitSet) -> Vec<Elem> {
    bits.ones().map(|x| x as Elem).collect()
}

impl SpreadWitness {
    pub fn root(&self) -> &SpreadNode {
        self.nodes.last().expect("witness has a root")
    }

    /// Longest chain of operation applications.
    pub fn depth(&self) -> usize {
        let mut d = vec![0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let SpreadStep::Apply { args, .. } = &node.step {
                d[i] = 1 + args.iter().map(|&a| d[a]).max().unwrap_or(0);
            }
        }
        d.last().copied().unwrap_or(0)
    }

    /// Recomputes every node setwise and checks the root is the universe.
    pub fn replay(&self, alg: &FiniteAlgebra) -> Result<bool> {
        let mut work = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            let expected: Vec<Elem> = match &node.step {
                SpreadStep::Member(m) => match self.family.get(*m) {
                    Some(u) => u.clone(),
                    None => return Ok(false),
                },
                SpreadStep::Singleton(e) => vec![*e],
                SpreadStep::Apply { op, args } => {
                    let index = alg.operation_index(op).ok_or_else(|| Error::UnknownSymbol(op.clone()))?;
                    if args.len() != alg.operations()[index].arity() || args.iter().any(|&a| a >= i) {
                        return Ok(false);
                    }
                    let sets: Vec<&[Elem]> = args.iter().map(|&a| self.nodes[a].set.as_slice()).collect();
                    elements(&setwise(alg, index, &sets, &mut work))
                }
            };
            if expected != node.set {
                return Ok(false);
            }
        }
        Ok(self.root().set.len() == alg.size())
    }

    /// The derivation as a polynomial with one variable per occurrence of a
    /// family member, and the member index for each variable. Singletons
    /// become constants.
    pub fn polynomial(&self) -> (Arc<Term>, Vec<usize>) {
        fn build(w: &SpreadWitness, i: usize, leaves: &mut Vec<usize>) -> Arc<Term> {
            match &w.nodes[i].step {
                SpreadStep::Member(m) => {
                    leaves.push(*m);
                    Term::var(leaves.len() - 1)
                }
                SpreadStep::Singleton(e) => Term::constant(*e),
                SpreadStep::Apply { op, args } => {
                    let sub = args.iter().map(|&a| build(w, a, leaves)).collect();
                    Term::apply(op.clone(), sub)
                }
            }
        }
        let mut leaves = Vec::new();
        let t = build(self, self.nodes.len() - 1, &mut leaves);
        (t, leaves)
    }
}

struct Antichain {
    sets: Vec<FixedBitSet>,
    steps: Vec<SpreadStep>,
    active: Vec<usize>,
}

impl Antichain {
    /// Adds `set` unless it is covered by a kept set; returns its id.
    fn offer(&mut self, set: FixedBitSet, step: SpreadStep) -> Option<usize> {
        if self.active.iter().any(|&a| set.is_subset(&self.sets[a])) {
            return None;
        }
        let id = self.sets.len();
        self.active.retain(|&a| !self.sets[a].is_subset(&set));
        self.active.push(id);
        self.sets.push(set);
        self.steps.push(step);
        Some(id)
    }

    fn witness(&self, family: &[Vec<Elem>], root: usize) -> SpreadWitness {
        let mut keep = vec![false; root + 1];
        keep[root] = true;
        for i in (0..=root).rev() {
            if keep[i] {
                if let SpreadStep::Apply { args, .. } = &self.steps[i] {
                    for &a in args {
                        keep[a] = true;
                    }
                }
            }
        }
        let mut renumber = vec![usize::MAX; root + 1];
        let mut nodes = Vec::new();
        for i in 0..=root {
            if !keep[i] {
                continue;
            }
            renumber[i] = nodes.len();
            let step = match &self.steps[i] {
                SpreadStep::Apply { op, args } => SpreadStep::Apply {
                    op: op.clone(),
                    args: args.iter().map(|&a| renumber[a]).collect(),
                },
                s => s.clone(),
            };
            nodes.push(SpreadNode {
                set: elements(&self.sets[i]),
                step,
            });
        }
        SpreadWitness {
            family: family.to_vec(),
            nodes,
        }
    }
}

/// Decides whether the universe is a spread of `family`.
pub fn spread_check(alg: &FiniteAlgebra, family: &[Vec<Elem>], budget: &ClosureBudget) -> Result<Search<SpreadWitness>> {
    let n = alg.size();
    for u in family {
        if u.is_empty() {
            return Err(Error::Precondition("family members must be nonempty".into()));
        }
        for &x in u {
            alg.check_element(x)?;
        }
    }
    let family: Vec<Vec<Elem>> = family
        .iter()
        .map(|u| {
            let mut u = u.clone();
            u.sort_unstable();
            u.dedup();
            u
        })
        .collect();
    let mut chain = Antichain {
        sets: Vec::new(),
        steps: Vec::new(),
        active: Vec::new(),
    };
    let to_bits = |u: &[Elem]| {
        let mut b = FixedBitSet::with_capacity(n);
        b.extend(u.iter().map(|&x| x as usize));
        b
    };
    let full = |b: &FixedBitSet| b.count_ones(..) == n;
    for (i, u) in family.iter().enumerate() {
        if let Some(id) = chain.offer(to_bits(u), SpreadStep::Member(i)) {
            if full(&chain.sets[id]) {
                return Ok(Search::Found(chain.witness(&family, id)));
            }
        }
    }
    for e in 0..n as Elem {
        if let Some(id) = chain.offer(to_bits(&[e]), SpreadStep::Singleton(e)) {
            if full(&chain.sets[id]) {
                return Ok(Search::Found(chain.witness(&family, id)));
            }
        }
    }
    let work_cap = (budget.max_elements as u64).saturating_mul(64);
    let mut work = 0u64;
    let mut frontier: Vec<usize> = chain.active.clone();
    let mut rounds = 0;
    while !frontier.is_empty() {
        if rounds >= budget.max_rounds {
            return Ok(Search::Unknown);
        }
        rounds += 1;
        let snapshot = chain.active.clone();
        let is_new: Vec<bool> = snapshot.iter().map(|a| frontier.contains(a)).collect();
        let mut next = Vec::new();
        for (op, operation) in alg.operations().iter().enumerate() {
            let k = operation.arity();
            if k == 0 {
                continue;
            }
            let mut idx = vec![0usize; k];
            'tuples: loop {
                if idx.iter().any(|&i| is_new[i]) {
                    let owned: Vec<Vec<Elem>> = idx.iter().map(|&i| elements(&chain.sets[snapshot[i]])).collect();
                    let args: Vec<&[Elem]> = owned.iter().map(|v| v.as_slice()).collect();
                    let image = setwise(alg, op, &args, &mut work);
                    let step = SpreadStep::Apply {
                        op: operation.symbol().to_string(),
                        args: idx.iter().map(|&i| snapshot[i]).collect(),
                    };
                    if let Some(id) = chain.offer(image, step) {
                        if full(&chain.sets[id]) {
                            return Ok(Search::Found(chain.witness(&family, id)));
                        }
                        next.push(id);
                    }
                    if work > work_cap || chain.sets.len() > budget.max_elements || budget.expired() {
                        return Ok(Search::Unknown);
                    }
                }
                let mut i = k;
                loop {
                    if i == 0 {
                        break 'tuples;
                    }
                    i -= 1;
                    idx[i] += 1;
                    if idx[i] < snapshot.len() {
                        break;
                    }
                    idx[i] = 0;
                }
            }
        }
        next.retain(|id| chain.active.contains(id));
        frontier = next;
    }
    Ok(Search::NotFound)
}

/// The outcome of the type 2 spread test, with the minimal sets gathered.
#[derive(Debug, Clone)]
pub struct Type2Spread {
    pub result: Search<SpreadWitness>,
    /// Minimal sets of the type 2 prime quotients examined.
    pub family: Vec<Vec<Elem>>,
    pub covers_examined: usize,
    pub covers_total: usize,
    pub type2_covers: usize,
    pub completeness: Completeness,
}

/// Maximum number of congruences enumerated by the type 2 spread test.
pub const SPREAD_LATTICE_CAP: usize = 1 << 16;

/// Gathers the minimal sets of the type 2 prime quotients and tests whether
/// the universe is a spread of them. Covers are visited lazily and the spread
/// is retried whenever new sets arrive, so a positive answer may come before
/// every quotient is typed. Covers are visited from the top of the lattice
/// down.
pub fn is_spread_of_type2_minimal_sets(alg: &FiniteAlgebra, budget: &ClosureBudget) -> Result<Type2Spread> {
    let lattice = congruence_lattice(alg, SPREAD_LATTICE_CAP)?;
    let unary = unary_polynomial_clone(alg, budget)?;
    let mut completeness = lattice.completeness().and(unary.completeness);
    let covers = lattice.covers();
    let mut family: Vec<Vec<Elem>> = Vec::new();
    let mut centralizers: BTreeMap<usize, MatrixClosure> = BTreeMap::new();
    let mut type2 = 0;
    let mut examined = 0;
    let mut last = Search::NotFound;
    for &(lo, hi) in covers.iter().rev() {
        examined += 1;
        let (alpha, beta) = (&lattice.congruences()[lo], &lattice.congruences()[hi]);
        let sets = minimal_sets_from(&unary, alpha, beta);
        if sets.sets.iter().all(|s| family.contains(&s.elements)) {
            continue;
        }
        let Some(first) = sets.sets.first() else {
            completeness = Completeness::Partial;
            continue;
        };
        let (.., maltsev) = trace_maltsev(alg, alpha, beta, &first.elements, budget)?;
        match maltsev {
            Search::Unknown => {
                completeness = Completeness::Partial;
                continue;
            }
            Search::NotFound => continue,
            Search::Found(_) => {}
        }
        if !centralizers.contains_key(&hi) {
            centralizers.insert(hi, MatrixClosure::new(alg, beta, beta)?);
        }
        if !centralizers[&hi].centralizes_modulo(alpha) {
            continue;
        }
        type2 += 1;
        for s in sets.sets {
            if !family.contains(&s.elements) {
                family.push(s.elements);
            }
        }
        last = spread_check(alg, &family, budget)?;
        if last.is_found() {
            return Ok(Type2Spread {
                result: last,
                family,
                covers_examined: examined,
                covers_total: covers.len(),
                type2_covers: type2,
                completeness,
            });
        }
        if last.is_unknown() {
            completeness = Completeness::Partial;
        }
    }
    let result = match last {
        Search::NotFound if completeness.is_complete() => Search::NotFound,
        Search::NotFound => Search::Unknown,
        other => other,
    };
    Ok(Type2Spread {
        result,
        family,
        covers_examined: examined,
        covers_total: covers.len(),
        type2_covers: type2,
        completeness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn b() -> ClosureBudget {
        ClosureBudget::default()
    }

    #[test]
    fn example_a_square_of_u() {
        let a = catalog::example_a();
        let w = spread_check(&a, &[vec![0, 2, 4, 6]], &b()).unwrap();
        let w = w.found().unwrap();
        assert!(w.replay(&a).unwrap());
        assert_eq!(w.depth(), 1);
        assert_eq!(w.nodes.len(), 2);
        let (p, leaves) = w.polynomial();
        assert_eq!(leaves, vec![0, 0]);
        assert_eq!(p.variable_bound(), 2);
    }

    #[test]
    fn whole_universe_is_trivial() {
        let lat = catalog::two_element_lattice();
        let w = spread_check(&lat, &[vec![0, 1]], &b()).unwrap();
        assert_eq!(w.found().unwrap().depth(), 0);
    }

    #[test]
    fn singletons_alone_do_not_spread() {
        let lat = catalog::two_element_lattice();
        assert!(spread_check(&lat, &[vec![1]], &b()).unwrap().is_not_found());
        let bare = catalog::two_element_bare_set();
        assert!(spread_check(&bare, &[vec![0]], &b()).unwrap().is_not_found());
    }

    #[test]
    fn tampered_witness_fails_replay() {
        let a = catalog::example_a();
        let mut w = spread_check(&a, &[vec![0, 2, 4, 6]], &b()).unwrap().found().unwrap().clone();
        w.family[0] = vec![0, 2, 4];
        assert!(!w.replay(&a).unwrap());
    }

    #[test]
    fn type2_families() {
        let z2 = catalog::z2_group();
        let r = is_spread_of_type2_minimal_sets(&z2, &b()).unwrap();
        assert_eq!(r.family, vec![vec![0, 1]]);
        assert!(r.result.is_found());
        let boolean = catalog::two_element_boolean();
        let r = is_spread_of_type2_minimal_sets(&boolean, &b()).unwrap();
        assert!(r.family.is_empty());
        assert!(r.result.is_not_found());
        let a = catalog::example_a();
        let r = is_spread_of_type2_minimal_sets(&a, &b()).unwrap();
        assert!(r.result.found().unwrap().replay(&a).unwrap());
        assert!(r.family.contains(&vec![0, 2, 4, 6]));
    }
}
