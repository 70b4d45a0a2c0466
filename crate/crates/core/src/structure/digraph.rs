//! Translation digraphs of idempotent polynomials and the solvability test
//! built on them.
//!
//! `Tr(p)` has an edge from `c` to `p(c,…,c,d,c,…,c)` for every `c`, `d` and
//! argument position. A finite algebra is solvable exactly when `Tr(p)` is
//! strongly connected for every idempotent polynomial `p` of every induced
//! algebra on a neighborhood. The checker enumerates polynomials only up to an
//! arity cap, so a refutation is final while a pass is relative to the cap.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use crate::algebra::FiniteAlgebra;
use crate::budget::{ClosureBudget, Completeness};
use crate::clone::{leaf_term, seeded, unary_polynomial_clone, WitnessedOperation};
use crate::closure::{CloseOutcome, Prepared, StopWhen};
use crate::error::{Error, Result};
use crate::tct::neighborhoods;
use crate::term::Term;
use crate::Elem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationDigraph {
    pub vertices: Vec<Elem>,
    pub edges: BTreeSet<(Elem, Elem)>,
}

impl TranslationDigraph {
    /// Builds `Tr(p)` on `vertices` for a `k`-ary operation given by `value`.
    /// Fails if `p` is not idempotent on the vertices.
    pub fn new(vertices: &[Elem], arity: usize, value: impl Fn(&[Elem]) -> Elem) -> Result<Self> {
        let mut args = vec![0; arity];
        Self::from_translations(vertices, arity, |c, pos, d| {
            args.fill(c);
            args[pos] = d;
            value(&args)
        })
    }

    /// Same as [`TranslationDigraph::new`], with `at(c, i, d)` giving the value
    /// at the tuple that is `c` everywhere except `d` in position `i`.
    pub fn from_translations(
        vertices: &[Elem],
        arity: usize,
        mut at: impl FnMut(Elem, usize, Elem) -> Elem,
    ) -> Result<Self> {
        for &c in vertices {
            if at(c, 0, c) != c {
                return Err(Error::Precondition(format!("polynomial is not idempotent at {c}")));
            }
        }
        let mut edges = BTreeSet::new();
        for &c in vertices {
            for pos in 0..arity {
                for &d in vertices {
                    edges.insert((c, at(c, pos, d)));
                }
            }
        }
        Ok(TranslationDigraph {
            vertices: vertices.to_vec(),
            edges,
        })
    }

    /// `Tr(p)` for an operation of the whole algebra given by its table.
    pub fn of_operation(alg: &FiniteAlgebra, p: &WitnessedOperation) -> Result<Self> {
        let codec = crate::algebra::TupleCodec::new(alg.size(), p.arity);
        let vertices: Vec<Elem> = alg.elements().collect();
        Self::new(&vertices, p.arity, |args| p.table[codec.encode(args)])
    }

    fn reach(&self, from: Elem, forward: bool) -> BTreeSet<Elem> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let (src, dst) = if forward { (a, b) } else { (b, a) };
                if src == v && seen.insert(dst) {
                    stack.push(dst);
                }
            }
        }
        seen
    }

    /// A pair `(a, b)` with no directed path from `a` to `b`, if any.
    pub fn unreachable_pair(&self) -> Option<(Elem, Elem)> {
        let root = *self.vertices.first()?;
        let fwd = self.reach(root, true);
        if let Some(&b) = self.vertices.iter().find(|v| !fwd.contains(v)) {
            return Some((root, b));
        }
        let back = self.reach(root, false);
        self.vertices.iter().find(|v| !back.contains(v)).map(|&a| (a, root))
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.unreachable_pair().is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigraphVerdict {
    ConsistentSolvable,
    RefutedNonsolvable,
    Unknown,
}

impl DigraphVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DigraphVerdict::ConsistentSolvable => "consistent_solvable",
            DigraphVerdict::RefutedNonsolvable => "refuted_nonsolvable",
            DigraphVerdict::Unknown => "unknown",
        }
    }
}

/// A neighborhood and an idempotent polynomial of the induced algebra whose
/// translation digraph is not strongly connected.
#[derive(Debug, Clone)]
pub struct DigraphCertificate {
    pub neighborhood: Vec<Elem>,
    pub arity: usize,
    /// A polynomial of the whole algebra; its restriction to the neighborhood
    /// is the induced polynomial.
    pub polynomial: Arc<Term>,
    pub digraph: TranslationDigraph,
    /// No path leads from the first to the second element.
    pub unreachable: (Elem, Elem),
}

impl DigraphCertificate {
    /// Rebuilds the digraph by evaluating the polynomial and checks the
    /// claimed unreachable pair.
    pub fn verify(&self, alg: &FiniteAlgebra) -> Result<bool> {
        let g = TranslationDigraph::new(&self.neighborhood, self.arity, |args| {
            self.polynomial.eval(alg, args).unwrap_or(Elem::MAX)
        })?;
        Ok(g == self.digraph && !g.reach(self.unreachable.0, true).contains(&self.unreachable.1))
    }
}

#[derive(Debug, Clone)]
pub struct DigraphCheck {
    pub verdict: DigraphVerdict,
    pub certificate: Option<DigraphCertificate>,
    pub arity_cap: usize,
    pub neighborhoods: usize,
    /// Distinct induced polynomials examined, summed over neighborhoods.
    pub polynomials_checked: usize,
    pub completeness: Completeness,
}

/// Points `(c,…,c)` and `(c,…,d,…,c)` of `A^k`, with a lookup by
/// `(c, position, d)`.
struct NearDiagonal {
    size: usize,
    points: Vec<Vec<Elem>>,
}

impl NearDiagonal {
    fn new(size: usize, arity: usize) -> Self {
        let mut points = Vec::new();
        for c in 0..size as Elem {
            points.push(vec![c; arity]);
        }
        for pos in 0..arity {
            for c in 0..size as Elem {
                for d in 0..size as Elem {
                    if d != c {
                        let mut p = vec![c; arity];
                        p[pos] = d;
                        points.push(p);
                    }
                }
            }
        }
        NearDiagonal { size, points }
    }

    fn index(&self, c: Elem, pos: usize, d: Elem) -> usize {
        let (n, c, d) = (self.size, c as usize, d as usize);
        if c == d {
            c
        } else {
            n + pos * n * (n - 1) + c * (n - 1) + if d < c { d } else { d - 1 }
        }
    }
}

pub fn solvability_digraph_check(alg: &FiniteAlgebra, arity_cap: usize, budget: &ClosureBudget) -> Result<DigraphCheck> {
    let unary = unary_polynomial_clone(alg, budget)?;
    let hoods: Vec<(Vec<Elem>, WitnessedOperation)> = neighborhoods(&unary)
        .into_iter()
        .filter(|(u, _)| u.len() >= 2)
        .collect();
    let mut completeness = unary.completeness;
    let mut checked = 0;
    let prep = Prepared::new(alg);
    // unary idempotent polynomials of an induced algebra are identities, whose
    // digraphs are complete
    for k in 2..=arity_cap {
        let nd = NearDiagonal::new(alg.size(), k);
        let mut sp = seeded(&prep, &nd.points, k, true, true);
        let outcome = sp.close(budget, &StopWhen::default());
        if outcome == CloseOutcome::Exhausted {
            completeness = Completeness::Partial;
        }
        for (u, e) in &hoods {
            let mut seen: HashSet<Vec<Elem>> = HashSet::new();
            for id in 0..sp.len() {
                let v = sp.vector(id);
                let at = |c: Elem, pos: usize, d: Elem| e.at(v[nd.index(c, pos, d)]);
                if u.iter().any(|&c| at(c, 0, c) != c) {
                    continue;
                }
                let key: Vec<Elem> = u
                    .iter()
                    .flat_map(|&c| {
                        (0..k).flat_map(move |pos| u.iter().map(move |&d| (c, pos, d)))
                    })
                    .map(|(c, pos, d)| e.at(v[nd.index(c, pos, d)]))
                    .collect();
                if !seen.insert(key) {
                    continue;
                }
                checked += 1;
                let g = TranslationDigraph::from_translations(u, k, at)?;
                if let Some(pair) = g.unreachable_pair() {
                    let inner = sp.term(id, &leaf_term(k));
                    return Ok(DigraphCheck {
                        verdict: DigraphVerdict::RefutedNonsolvable,
                        certificate: Some(DigraphCertificate {
                            neighborhood: u.clone(),
                            arity: k,
                            polynomial: e.witness.substitute(&[inner]),
                            digraph: g,
                            unreachable: pair,
                        }),
                        arity_cap,
                        neighborhoods: hoods.len(),
                        polynomials_checked: checked,
                        completeness,
                    });
                }
            }
        }
    }
    Ok(DigraphCheck {
        verdict: if completeness.is_complete() {
            DigraphVerdict::ConsistentSolvable
        } else {
            DigraphVerdict::Unknown
        },
        certificate: None,
        arity_cap,
        neighborhoods: hoods.len(),
        polynomials_checked: checked,
        completeness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::commutator::abelianness_profile;

    #[test]
    fn z2_sum_digraph() {
        let g = TranslationDigraph::new(&[0, 1], 3, |a| a[0] ^ a[1] ^ a[2]).unwrap();
        assert!(g.is_strongly_connected());
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn meet_digraph() {
        let g = TranslationDigraph::new(&[0, 1], 2, |a| a[0] & a[1]).unwrap();
        assert_eq!(g.edges, BTreeSet::from([(0, 0), (1, 0), (1, 1)]));
        assert!(!g.is_strongly_connected());
        assert_eq!(g.unreachable_pair(), Some((0, 1)));
    }

    #[test]
    fn identity_digraph_is_complete() {
        let g = TranslationDigraph::new(&[0, 1, 2], 1, |a| a[0]).unwrap();
        assert_eq!(g.edges.len(), 9);
        assert!(g.is_strongly_connected());
        assert!(TranslationDigraph::new(&[0, 1], 1, |a| 1 - a[0]).is_err());
    }

    #[test]
    fn lattice_is_refuted() {
        let lat = catalog::two_element_lattice();
        let r = solvability_digraph_check(&lat, 3, &ClosureBudget::default()).unwrap();
        assert_eq!(r.verdict, DigraphVerdict::RefutedNonsolvable);
        let c = r.certificate.unwrap();
        assert_eq!(c.neighborhood, vec![0, 1]);
        assert_eq!(c.arity, 2);
        assert!(c.verify(&lat).unwrap());
        assert_eq!(c.digraph.edges, BTreeSet::from([(0, 0), (1, 0), (1, 1)]));
    }

    #[test]
    fn small_solvable_algebras_pass() {
        for alg in [catalog::z2_group(), catalog::z3_group(), catalog::two_element_bare_set(), catalog::example_b()] {
            let r = solvability_digraph_check(&alg, 3, &ClosureBudget::default()).unwrap();
            assert!(abelianness_profile(&alg).unwrap().solvable);
            assert_eq!(r.verdict, DigraphVerdict::ConsistentSolvable, "{}", alg.name());
        }
        let one = FiniteAlgebra::new("one", 1, vec![]).unwrap();
        let r = solvability_digraph_check(&one, 3, &ClosureBudget::default()).unwrap();
        assert_eq!(r.verdict, DigraphVerdict::ConsistentSolvable);
    }
}
