//! Maltsev polynomials and terms.

use crate::algebra::FiniteAlgebra;
use crate::budget::{ClosureBudget, Search};
use crate::clone::{interpolation_closure, Interpolant, PartialDomain};
use crate::error::Result;
use crate::Elem;

/// The points `(a,b,b)` and `(b,b,a)` of `A^3` with required value `a`.
pub fn maltsev_domain(size: usize) -> PartialDomain {
    let n = size as Elem;
    let mut constraints = Vec::with_capacity(2 * size * size);
    for a in 0..n {
        for b in 0..n {
            constraints.push((vec![a, b, b], a));
            constraints.push((vec![b, b, a], a));
        }
    }
    PartialDomain::from_constraints(3, constraints)
        .expect("points have length 3")
        .expect("Maltsev constraints agree on (a,a,a)")
}

pub fn has_maltsev_polynomial(alg: &FiniteAlgebra, budget: &ClosureBudget) -> Result<Search<Interpolant>> {
    interpolation_closure(alg, &maltsev_domain(alg.size()), true, budget)
}

pub fn has_maltsev_term(alg: &FiniteAlgebra, budget: &ClosureBudget) -> Result<Search<Interpolant>> {
    interpolation_closure(alg, &maltsev_domain(alg.size()), false, budget)
}

/// Checks `m(x,y,y) = x = m(y,y,x)` on every pair.
pub fn is_maltsev(alg: &FiniteAlgebra, m: &Interpolant) -> Result<bool> {
    let d = maltsev_domain(alg.size());
    let values = m.witness.eval_points(alg, d.points())?;
    Ok(Some(values.as_slice()) == d.targets())
}
