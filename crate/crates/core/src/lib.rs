//! Finite algebras: congruences, commutators, polynomial clones, tame
//! congruence theory, structural tests and growth of generating sets.

pub type Elem = u32;

pub mod algebra;
pub mod budget;
pub mod catalog;
pub mod clone;
pub mod closure;
pub mod commutator;
pub mod congruence;
pub mod error;
pub mod growth;
pub mod io;
pub mod structure;
pub mod tct;
pub mod term;

pub use algebra::{FiniteAlgebra, Operation, TupleCodec};
pub use budget::{ClosureBudget, Completeness, Limits, Search};
pub use congruence::{Congruence, CongruenceLattice};
pub use error::{Error, Result};
pub use term::Term;
