//! Polynomial clones and interpolation.
//!
//! A polynomial operation is determined by its values on a set of points, so
//! every clone computation here is a subpower closure: the coordinates are the
//! points, the generators are the projections (and constant maps) restricted
//! to them.

use std::sync::Arc;

use rustc_hash::FxHashSet;

use crate::algebra::{checked_pow, FiniteAlgebra, TupleCodec};
use crate::budget::{ClosureBudget, Completeness, Limits, Search};
use crate::closure::{CloseOutcome, Prepared, StopWhen, Subpower};
use crate::error::{Error, Result};
use crate::term::Term;
use crate::Elem;

/// An operation given by its values on a list of points, together with a term
/// with constants that produces those values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessedOperation {
    pub arity: usize,
    pub table: Vec<Elem>,
    pub witness: Arc<Term>,
}

impl WitnessedOperation {
    /// Re-evaluates the witness at `points` and compares with the table.
    pub fn verify_on(&self, alg: &FiniteAlgebra, points: &[Vec<Elem>]) -> Result<bool> {
        Ok(self.witness.eval_points(alg, points)? == self.table)
    }

    /// Re-evaluates the witness on all of `A^arity`.
    pub fn verify(&self, alg: &FiniteAlgebra) -> Result<bool> {
        let codec = TupleCodec::new(alg.size(), self.arity);
        let points: Vec<Vec<Elem>> = codec.tuples().collect();
        self.verify_on(alg, &points)
    }

    pub fn image(&self) -> Vec<Elem> {
        let mut v = self.table.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Unary case: applies the operation to an element.
    pub fn at(&self, e: Elem) -> Elem {
        self.table[e as usize]
    }
}

/// Points in `A^m` with optional required values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialDomain {
    arity: usize,
    points: Vec<Vec<Elem>>,
    targets: Option<Vec<Elem>>,
}

impl PartialDomain {
    pub fn new(arity: usize, points: Vec<Vec<Elem>>, targets: Option<Vec<Elem>>) -> Result<Self> {
        if points.iter().any(|p| p.len() != arity) {
            return Err(Error::Precondition("domain point of wrong length".into()));
        }
        let distinct: FxHashSet<&Vec<Elem>> = points.iter().collect();
        if distinct.len() != points.len() {
            return Err(Error::Precondition("domain points must be distinct".into()));
        }
        if let Some(t) = &targets {
            if t.len() != points.len() {
                return Err(Error::Precondition("one target per domain point required".into()));
            }
        }
        Ok(PartialDomain { arity, points, targets })
    }

    /// Builds a domain from `(point, target)` constraints, merging repeated
    /// points. Returns `None` if some point is given two different targets.
    pub fn from_constraints(arity: usize, constraints: impl IntoIterator<Item = (Vec<Elem>, Elem)>) -> Result<Option<Self>> {
        let mut index: std::collections::HashMap<Vec<Elem>, usize> = std::collections::HashMap::new();
        let mut points = Vec::new();
        let mut targets = Vec::new();
        for (p, t) in constraints {
            match index.get(&p) {
                Some(&i) => {
                    if targets[i] != t {
                        return Ok(None);
                    }
                }
                None => {
                    index.insert(p.clone(), points.len());
                    points.push(p);
                    targets.push(t);
                }
            }
        }
        Self::new(arity, points, Some(targets)).map(Some)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn points(&self) -> &[Vec<Elem>] {
        &self.points
    }

    pub fn targets(&self) -> Option<&[Elem]> {
        self.targets.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A set of polynomial operations and whether it is known to be all of them.
#[derive(Debug, Clone)]
pub struct OperationSet {
    pub operations: Vec<WitnessedOperation>,
    pub completeness: Completeness,
}

impl OperationSet {
    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    pub fn contains_table(&self, table: &[Elem]) -> bool {
        self.operations
            .binary_search_by(|o| o.table.as_slice().cmp(table))
            .is_ok()
    }
}

pub(crate) fn leaf_term(arity: usize) -> impl Fn(u32) -> Arc<Term> {
    move |label| {
        let l = label as usize;
        if l < arity {
            Term::var(l)
        } else {
            Term::constant((l - arity) as Elem)
        }
    }
}

/// Seeds a closure on `points` with the projections and, optionally, the
/// constant maps. Generator labels: `i < arity` is `x{i}`, `arity + c` is `c`.
pub(crate) fn seeded(prep: &Arc<Prepared>, points: &[Vec<Elem>], arity: usize, constants: bool, track: bool) -> Subpower {
    let mut sp = Subpower::new(prep.clone(), points.len(), track);
    for i in 0..arity {
        let col: Vec<Elem> = points.iter().map(|p| p[i]).collect();
        sp.add_generator(&col, i as u32);
    }
    if constants {
        for c in 0..prep.algebra().size() as Elem {
            sp.add_generator(&vec![c; points.len()], arity as u32 + c);
        }
    }
    sp
}

fn collect(sp: &Subpower, arity: usize, outcome: CloseOutcome) -> OperationSet {
    let terms = sp.terms(&leaf_term(arity));
    let mut operations: Vec<WitnessedOperation> = terms
        .into_iter()
        .enumerate()
        .map(|(id, witness)| WitnessedOperation {
            arity,
            table: sp.vector(id),
            witness,
        })
        .collect();
    operations.sort_by(|a, b| a.table.cmp(&b.table));
    OperationSet {
        operations,
        completeness: if outcome == CloseOutcome::Exhausted {
            Completeness::Partial
        } else {
            Completeness::Complete
        },
    }
}

/// All unary polynomial operations, ordered by table.
pub fn unary_polynomial_clone(alg: &FiniteAlgebra, budget: &ClosureBudget) -> Result<OperationSet> {
    bounded_polynomial_clone(alg, 1, budget)
}

/// All `m`-ary polynomial operations, as tables over `A^m`, ordered by table.
pub fn bounded_polynomial_clone(alg: &FiniteAlgebra, m: usize, budget: &ClosureBudget) -> Result<OperationSet> {
    if m == 0 {
        return Err(Error::Precondition("polynomial clone arity must be at least 1".into()));
    }
    let limits = Limits::default();
    let width = checked_pow(alg.size(), m)
        .filter(|&w| w <= limits.table_cap)
        .ok_or_else(|| Error::CapExceeded {
            what: format!("{m}-ary operation domain"),
            requested: (alg.size() as u128).saturating_pow(m as u32),
            cap: limits.table_cap,
        })?;
    let codec = TupleCodec::new(alg.size(), m);
    let points: Vec<Vec<Elem>> = (0..width).map(|i| codec.decode(i)).collect();
    let prep = Prepared::new(alg);
    let mut sp = seeded(&prep, &points, m, true, true);
    let outcome = sp.close(budget, &StopWhen::default());
    Ok(collect(&sp, m, outcome))
}

/// `f^k` for the least `k ≥ 1` making it idempotent.
pub fn idempotent_power(f: &WitnessedOperation) -> WitnessedOperation {
    assert_eq!(f.arity, 1, "idempotent_power needs a unary operation");
    let n = f.table.len();
    let compose = |g: &[Elem], h: &[Elem]| -> Vec<Elem> { (0..n).map(|x| g[h[x] as usize]).collect() };
    let idempotent = |g: &[Elem]| g.iter().all(|&y| g[y as usize] == y);
    let mut table = f.table.clone();
    let mut witness = f.witness.clone();
    // k ≤ n! in general, but the first idempotent power occurs within n + lcm steps
    while !idempotent(&table) {
        table = compose(&f.table, &table);
        witness = f.witness.substitute(&[witness]);
    }
    WitnessedOperation {
        arity: 1,
        table,
        witness,
    }
}

/// A polynomial interpolating the targets of a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpolant {
    pub arity: usize,
    pub witness: Arc<Term>,
}

impl Interpolant {
    pub fn table(&self, alg: &FiniteAlgebra) -> Result<WitnessedOperation> {
        let table = self.witness.table(alg, self.arity, &Limits::default())?;
        Ok(WitnessedOperation {
            arity: self.arity,
            table,
            witness: self.witness.clone(),
        })
    }
}

/// Searches for a polynomial (or, without constants, a term operation) taking
/// the required values at the domain points.
pub fn interpolation_closure(
    alg: &FiniteAlgebra,
    domain: &PartialDomain,
    allow_constants: bool,
    budget: &ClosureBudget,
) -> Result<Search<Interpolant>> {
    let prep = Prepared::new(alg);
    interpolate_with(&prep, domain, allow_constants, budget)
}

pub(crate) fn interpolate_with(
    prep: &Arc<Prepared>,
    domain: &PartialDomain,
    allow_constants: bool,
    budget: &ClosureBudget,
) -> Result<Search<Interpolant>> {
    let targets = domain
        .targets()
        .ok_or_else(|| Error::Precondition("interpolation needs targets".into()))?;
    let arity = domain.arity();
    let mut sp = seeded(prep, domain.points(), arity, allow_constants, true);
    let found = match sp.position(targets) {
        Some(id) => Some(id),
        None => {
            let stop = StopWhen {
                target: Some(targets.to_vec()),
                count: None,
            };
            match sp.close(budget, &stop) {
                CloseOutcome::Target(id) => Some(id),
                CloseOutcome::Exhausted => return Ok(Search::Unknown),
                _ => None,
            }
        }
    };
    Ok(match found {
        Some(id) => Search::Found(Interpolant {
            arity,
            witness: sp.term(id, &leaf_term(arity)),
        }),
        None => Search::NotFound,
    })
}

/// Polynomial operations of the induced algebra on a neighborhood.
#[derive(Debug, Clone)]
pub struct InducedClone {
    /// The neighborhood `U = e(A)`, sorted.
    pub universe: Vec<Elem>,
    pub arity: usize,
    /// Tables over `U^m` in the codec of `|U|` (local indices into `universe`);
    /// entries are elements of `A`.
    pub operations: OperationSet,
}

/// The `m`-ary polynomials of `A|_U` for `U = e(A)`: all `e∘p` restricted to
/// `U^m`, with `p` ranging over `Pol_m(A)`.
pub fn induced_polynomials(
    alg: &FiniteAlgebra,
    e: &WitnessedOperation,
    m: usize,
    budget: &ClosureBudget,
) -> Result<InducedClone> {
    if e.arity != 1 || e.table.iter().any(|&y| e.table[y as usize] != y) {
        return Err(Error::Precondition("induced algebras need an idempotent unary polynomial".into()));
    }
    if m == 0 {
        return Err(Error::Precondition("polynomial clone arity must be at least 1".into()));
    }
    let universe = e.image();
    let limits = Limits::default();
    let width = checked_pow(universe.len(), m)
        .filter(|&w| w <= limits.table_cap)
        .ok_or_else(|| Error::CapExceeded {
            what: format!("{m}-ary induced domain"),
            requested: (universe.len() as u128).saturating_pow(m as u32),
            cap: limits.table_cap,
        })?;
    let codec = TupleCodec::new(universe.len(), m);
    let points: Vec<Vec<Elem>> = (0..width)
        .map(|i| codec.decode(i).into_iter().map(|j| universe[j as usize]).collect())
        .collect();
    let prep = Prepared::new(alg);
    let mut sp = seeded(&prep, &points, m, true, true);
    let outcome = sp.close(budget, &StopWhen::default());
    let all = collect(&sp, m, outcome);
    let mut seen: FxHashSet<Vec<Elem>> = FxHashSet::default();
    let mut operations = Vec::new();
    for op in all.operations {
        let table: Vec<Elem> = op.table.iter().map(|&v| e.at(v)).collect();
        if seen.insert(table.clone()) {
            operations.push(WitnessedOperation {
                arity: m,
                table,
                witness: e.witness.substitute(&[op.witness]),
            });
        }
    }
    operations.sort_by(|a, b| a.table.cmp(&b.table));
    Ok(InducedClone {
        universe,
        arity: m,
        operations: OperationSet {
            operations,
            completeness: all.completeness,
        },
    })
}
