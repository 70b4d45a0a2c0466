//! Term-condition commutators and the abelianness hierarchy.
//!
//! The term condition `C(α, β; δ)` quantifies over all polynomials. Every
//! instance is a row `(t(a,u), t(a,v), t(b,u), t(b,v))` of a matrix, and the
//! set of all such rows is the subuniverse of `A^4` generated by the columns
//! `(a,a,b,b)` for `a α b` and `(u,v,u,v)` for `u β v` (constants come from the
//! diagonal pairs). The strong term condition is decided the same way with
//! columns `(a,b,c,c)` and `(u,v,u,v)`.

use std::sync::Arc;
use std::time::Instant;

use crate::algebra::{checked_pow, FiniteAlgebra, TupleCodec};
use crate::budget::{ClosureBudget, Limits, Search};
use crate::closure::{CloseOutcome, Prepared, StopWhen, Subpower};
use crate::congruence::{Congruence, Translations};
use crate::error::{Error, Result};
use crate::Elem;

/// All `(α, β)`-matrix rows `(x11, x12, x21, x22)`.
#[derive(Debug, Clone)]
pub struct MatrixClosure {
    rows: Vec<[Elem; 4]>,
}

impl MatrixClosure {
    pub fn new(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<Self> {
        let prep = Prepared::new(alg);
        Self::with_prepared(&prep, alpha, beta)
    }

    pub(crate) fn with_prepared(prep: &Arc<Prepared>, alpha: &Congruence, beta: &Congruence) -> Result<Self> {
        let mut gens = Vec::new();
        for (a, b) in alpha.pairs() {
            gens.push(vec![a, a, b, b]);
        }
        for (u, v) in beta.pairs() {
            gens.push(vec![u, v, u, v]);
        }
        let rows = close_rows(prep, &gens, "commutator matrix closure", None)?.expect("no deadline");
        Ok(MatrixClosure { rows })
    }

    pub fn rows(&self) -> &[[Elem; 4]] {
        &self.rows
    }

    /// Whether `C(α, β; δ)` holds.
    pub fn centralizes_modulo(&self, delta: &Congruence) -> bool {
        self.rows
            .iter()
            .all(|r| !delta.related(r[0], r[1]) || delta.related(r[2], r[3]))
    }

    /// A row witnessing failure of `C(α, β; δ)`.
    pub fn violation(&self, delta: &Congruence) -> Option<[Elem; 4]> {
        self.rows
            .iter()
            .find(|r| delta.related(r[0], r[1]) && !delta.related(r[2], r[3]))
            .copied()
    }
}

/// `None` when the deadline passes first.
fn close_rows(
    prep: &Arc<Prepared>,
    gens: &[Vec<Elem>],
    what: &str,
    deadline: Option<Instant>,
) -> Result<Option<Vec<[Elem; 4]>>> {
    let size = prep.algebra().size();
    let cap = Limits::default().table_cap;
    let full = checked_pow(size, 4);
    let mut sp = Subpower::new(prep.clone(), 4, false);
    for g in gens {
        sp.add_generator(g, 0);
    }
    let budget = ClosureBudget {
        max_elements: cap,
        max_rounds: usize::MAX,
        deadline,
    };
    let stop = StopWhen {
        target: None,
        count: full,
    };
    if sp.close(&budget, &stop) == CloseOutcome::Exhausted {
        if budget.expired() {
            return Ok(None);
        }
        return Err(Error::CapExceeded {
            what: what.to_string(),
            requested: (size as u128).pow(4),
            cap,
        });
    }
    let mut rows: Vec<[Elem; 4]> = sp
        .vectors()
        .map(|v| [v[0], v[1], v[2], v[3]])
        .collect();
    rows.sort_unstable();
    Ok(Some(rows))
}

pub fn centralizes(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence, delta: &Congruence) -> Result<bool> {
    Ok(MatrixClosure::new(alg, alpha, beta)?.centralizes_modulo(delta))
}

/// Shared state for repeated commutator computations on one algebra.
pub struct CommutatorEngine {
    prep: Arc<Prepared>,
    translations: Translations,
}

impl CommutatorEngine {
    pub fn new(alg: &FiniteAlgebra) -> Result<Self> {
        Ok(CommutatorEngine {
            prep: Prepared::new(alg),
            translations: Translations::new(alg)?,
        })
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        self.prep.algebra()
    }

    pub fn translations(&self) -> &Translations {
        &self.translations
    }

    pub fn matrices(&self, alpha: &Congruence, beta: &Congruence) -> Result<MatrixClosure> {
        MatrixClosure::with_prepared(&self.prep, alpha, beta)
    }

    /// `[α, β]`.
    pub fn commutator(&self, alpha: &Congruence, beta: &Congruence) -> Result<Congruence> {
        let m = self.matrices(alpha, beta)?;
        let pairs: Vec<(Elem, Elem)> = m
            .rows()
            .iter()
            .filter(|r| r[0] == r[1] && r[2] != r[3])
            .map(|r| (r[2], r[3]))
            .collect();
        Ok(self.translations.generate(None, &pairs))
    }

    /// A row `(t(a,u), t(b,v), t(c,u), t(c,v))` with equal first two entries
    /// and distinct last two, if the strong term condition fails.
    pub fn strong_violation(&self) -> Result<Option<[Elem; 4]>> {
        Ok(self.strong_violation_search(None)?.found().copied())
    }

    /// As [`strong_violation`](Self::strong_violation), giving up with
    /// `Unknown` at the deadline.
    pub fn strong_violation_search(&self, deadline: Option<Instant>) -> Result<Search<[Elem; 4]>> {
        Ok(match self.strong_violations(deadline)? {
            Search::Found(rows) => Search::Found(rows[0]),
            Search::NotFound => Search::NotFound,
            Search::Unknown => Search::Unknown,
        })
    }

    /// Rows `(x, x, z, w)` with `z ≠ w` of the strong term condition
    /// closure, from the first partial closure that has any.
    pub fn strong_violations(&self, deadline: Option<Instant>) -> Result<Search<Vec<[Elem; 4]>>> {
        let n = self.algebra().size() as Elem;
        let mut gens = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gens.push(vec![a, b, c, c]);
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                gens.push(vec![u, v, u, v]);
            }
        }
        let bad = |r: &[Elem]| r[0] == r[1] && r[2] != r[3];
        // a partial closure already refutes; try a few rounds before closing fully
        for rounds in 1..=2 {
            let mut sp = Subpower::new(self.prep.clone(), 4, false);
            for g in &gens {
                sp.add_generator(g, 0);
            }
            let short = ClosureBudget {
                max_elements: Limits::default().table_cap,
                max_rounds: rounds,
                deadline,
            };
            sp.close(&short, &StopWhen::default());
            if short.expired() {
                return Ok(Search::Unknown);
            }
            let mut rows: Vec<[Elem; 4]> = sp
                .vectors()
                .filter(|r| bad(r))
                .map(|r| [r[0], r[1], r[2], r[3]])
                .collect();
            if !rows.is_empty() {
                rows.sort_unstable();
                return Ok(Search::Found(rows));
            }
        }
        Ok(match close_rows(&self.prep, &gens, "strong term condition closure", deadline)? {
            None => Search::Unknown,
            Some(rows) => {
                let rows: Vec<[Elem; 4]> = rows.into_iter().filter(|r| bad(r)).collect();
                if rows.is_empty() {
                    Search::NotFound
                } else {
                    Search::Found(rows)
                }
            }
        })
    }

    pub fn profile(&self) -> Result<AbelianProfile> {
        let size = self.algebra().size();
        let zero = Congruence::identity(size);
        let one = Congruence::full(size);
        let mut derived = vec![one.clone()];
        loop {
            let last = derived.last().expect("nonempty");
            let next = self.commutator(last, last)?;
            if &next == last {
                break;
            }
            derived.push(next);
        }
        let mut lower = vec![one.clone()];
        loop {
            let last = lower.last().expect("nonempty");
            let next = self.commutator(&one, last)?;
            if &next == last {
                break;
            }
            lower.push(next);
        }
        let abelian = self.commutator(&one, &one)? == zero;
        let strong_violation = self.strong_violation()?;
        Ok(AbelianProfile {
            abelian,
            strongly_abelian: strong_violation.is_none(),
            left_nilpotent: lower.last() == Some(&zero),
            solvable: derived.last() == Some(&zero),
            derived_series: derived,
            lower_series: lower,
            strong_violation,
        })
    }
}

pub fn commutator(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<Congruence> {
    CommutatorEngine::new(alg)?.commutator(alpha, beta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianProfile {
    pub abelian: bool,
    pub strongly_abelian: bool,
    pub left_nilpotent: bool,
    pub solvable: bool,
    /// `1, [1,1], [[1,1],[1,1]], ...` until it stabilizes.
    pub derived_series: Vec<Congruence>,
    /// `1, [1,1], [1,[1,1]], ...` until it stabilizes.
    pub lower_series: Vec<Congruence>,
    pub strong_violation: Option<[Elem; 4]>,
}

pub fn abelianness_profile(alg: &FiniteAlgebra) -> Result<AbelianProfile> {
    CommutatorEngine::new(alg)?.profile()
}

pub fn is_strongly_abelian(alg: &FiniteAlgebra) -> Result<bool> {
    Ok(CommutatorEngine::new(alg)?.strong_violation()?.is_none())
}

pub fn is_abelian(alg: &FiniteAlgebra) -> Result<bool> {
    let size = alg.size();
    let one = Congruence::full(size);
    Ok(MatrixClosure::new(alg, &one, &one)?.centralizes_modulo(&Congruence::identity(size)))
}

/// Least congruence of `A^2` collapsing the diagonal.
pub fn diagonal_collapse(alg: &FiniteAlgebra) -> Result<(FiniteAlgebra, Congruence)> {
    let sq = alg.direct_power(2, &Limits::default())?;
    let n = alg.size() as Elem;
    let pairs: Vec<(Elem, Elem)> = (1..n).map(|a| (0, a * n + a)).collect();
    let delta = Translations::new(&sq)?.generate(None, &pairs);
    Ok((sq, delta))
}

/// Outcome of the search for a nontrivial strongly abelian quotient of a power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientSearch {
    /// A congruence of `A^n` with a nontrivial strongly abelian quotient.
    Found(Congruence),
    None,
    /// The lattice or some quotient exceeded the budget.
    Unknown,
}

/// Searches `Con(A^n)` for a congruence `θ ≠ 1` with `A^n/θ` strongly abelian.
///
/// The quotient by `θ` is strongly abelian iff every row `(x, y, z, w)` of the
/// strong term condition closure of `A^n` with `x θ y` has `z θ w`, since the
/// closure of the quotient is the image of that closure. Congruences with
/// this property are closed under meets, so there is a least one, and a
/// proper one exists iff the least one is proper. It is reached from below:
/// every violation found in the current quotient is a pair the least one must
/// contain. `max_congruences` caps the number of quotients examined.
pub fn strongly_abelian_quotient_exists(
    alg: &FiniteAlgebra,
    n: usize,
    max_congruences: usize,
    limits: &Limits,
    budget: &ClosureBudget,
) -> Result<QuotientSearch> {
    let power = alg.direct_power(n, limits)?;
    if power.size() == 1 {
        return Ok(QuotientSearch::None);
    }
    // A^n embeds the diagonal copy of A and is a power of A, so θ = 0 reduces to A
    let base = match CommutatorEngine::new(alg)?.strong_violations(budget.deadline)? {
        Search::NotFound => return Ok(QuotientSearch::Found(Congruence::identity(power.size()))),
        Search::Unknown => return Ok(QuotientSearch::Unknown),
        Search::Found(rows) => rows,
    };
    let codec = TupleCodec::new(alg.size(), n);
    let diagonal = |e: Elem| codec.encode(&vec![e; n]) as Elem;
    let pairs: Vec<(Elem, Elem)> = base.iter().map(|r| (diagonal(r[2]), diagonal(r[3]))).collect();
    let tr = Translations::new(&power)?;
    let mut theta = tr.generate(None, &pairs);
    for _ in 0..max_congruences {
        if theta.is_full() {
            return Ok(QuotientSearch::None);
        }
        if budget.expired() || checked_pow(theta.num_classes(), 4).is_none_or(|c| c > limits.table_cap) {
            return Ok(QuotientSearch::Unknown);
        }
        let (q, _) = power.quotient(&theta)?;
        let rows = match CommutatorEngine::new(&q).and_then(|e| e.strong_violations(budget.deadline)) {
            Ok(Search::NotFound) => return Ok(QuotientSearch::Found(theta)),
            Ok(Search::Found(rows)) => rows,
            Ok(Search::Unknown) | Err(Error::CapExceeded { .. }) => return Ok(QuotientSearch::Unknown),
            Err(e) => return Err(e),
        };
        let reps = theta.representatives();
        let pairs: Vec<(Elem, Elem)> = rows
            .iter()
            .map(|r| (reps[r[2] as usize], reps[r[3] as usize]))
            .collect();
        theta = tr.generate(Some(&theta), &pairs);
    }
    Ok(QuotientSearch::Unknown)
}
