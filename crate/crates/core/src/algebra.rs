//! Finite algebras given by operation tables.
//!
//! The universe of an algebra of size `n` is `0..n`. An operation of arity
//! `k` is stored as a flat table of length `n^k`, indexed in mixed radix with
//! the last argument varying fastest. Direct powers use the same encoding for
//! their elements, see [`TupleCodec`].

use std::collections::HashSet;
use std::sync::Arc;

use crate::budget::Limits;
use crate::congruence::Congruence;
use crate::error::{Error, Result};
use crate::Elem;

/// Mixed-radix encoding of tuples over `0..base`, last coordinate fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleCodec {
    base: usize,
    width: usize,
}

impl TupleCodec {
    pub fn new(base: usize, width: usize) -> Self {
        assert!(base > 0, "codec base must be positive");
        TupleCodec { base, width }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of tuples, `base^width`, or `None` on overflow.
    pub fn len(&self) -> Option<usize> {
        checked_pow(self.base, self.width)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn encode(&self, tuple: &[Elem]) -> usize {
        debug_assert_eq!(tuple.len(), self.width);
        tuple
            .iter()
            .fold(0usize, |acc, &x| acc * self.base + x as usize)
    }

    pub fn decode(&self, index: usize) -> Vec<Elem> {
        let mut out = vec![0; self.width];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [Elem]) {
        for slot in out.iter_mut().rev() {
            *slot = (index % self.base) as Elem;
            index /= self.base;
        }
    }

    /// Iterates over all tuples in increasing code order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        let n = self.len().expect("codec too large to enumerate");
        (0..n).map(move |i| self.decode(i))
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// A named finitary operation with its table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operation {
    symbol: String,
    arity: usize,
    table: Arc<[Elem]>,
}

impl Operation {
    pub fn new(symbol: impl Into<String>, arity: usize, table: Vec<Elem>) -> Self {
        Operation {
            symbol: symbol.into(),
            arity,
            table: table.into(),
        }
    }

    /// Builds the table by evaluating `f` on every argument tuple.
    pub fn from_fn(
        symbol: impl Into<String>,
        size: usize,
        arity: usize,
        mut f: impl FnMut(&[Elem]) -> Elem,
    ) -> Self {
        let codec = TupleCodec::new(size, arity);
        let len = codec.len().expect("operation table too large");
        let mut args = vec![0; arity];
        let table = (0..len)
            .map(|i| {
                codec.decode_into(i, &mut args);
                f(&args)
            })
            .collect();
        Operation::new(symbol, arity, table)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    /// Value at an argument tuple. Panics if the tuple has the wrong length.
    #[inline]
    pub fn apply(&self, args: &[Elem], size: usize) -> Elem {
        assert_eq!(args.len(), self.arity);
        let idx = args.iter().fold(0usize, |acc, &x| acc * size + x as usize);
        self.table[idx]
    }
}

/// A finite algebra: universe `0..size` together with operation tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    operations: Vec<Operation>,
    element_names: Option<Vec<String>>,
}

impl FiniteAlgebra {
    /// Validates table lengths, entry ranges and symbol uniqueness.
    pub fn new(name: impl Into<String>, size: usize, operations: Vec<Operation>) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyUniverse);
        }
        let mut seen = HashSet::new();
        for op in &operations {
            if !seen.insert(op.symbol.clone()) {
                return Err(Error::DuplicateSymbol(op.symbol.clone()));
            }
            let expected = checked_pow(size, op.arity).ok_or_else(|| Error::CapExceeded {
                what: format!("table of `{}`", op.symbol),
                requested: (size as u128).saturating_pow(op.arity as u32),
                cap: usize::MAX,
            })?;
            if op.table.len() != expected {
                return Err(Error::TableLength {
                    symbol: op.symbol.clone(),
                    expected,
                    found: op.table.len(),
                });
            }
            if let Some((index, &value)) =
                op.table.iter().enumerate().find(|(_, &v)| v as usize >= size)
            {
                return Err(Error::EntryOutOfRange {
                    symbol: op.symbol.clone(),
                    index,
                    value: value as u64,
                    size,
                });
            }
        }
        Ok(FiniteAlgebra {
            name: name.into(),
            size,
            operations,
            element_names: None,
        })
    }

    pub fn with_element_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.size {
            return Err(Error::Precondition(format!(
                "{} element names given for a universe of size {}",
                names.len(),
                self.size
            )));
        }
        self.element_names = Some(names);
        Ok(self)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn element_names(&self) -> Option<&[String]> {
        self.element_names.as_deref()
    }

    pub fn operation(&self, symbol: &str) -> Option<&Operation> {
        self.operations.iter().find(|op| op.symbol == symbol)
    }

    pub fn operation_index(&self, symbol: &str) -> Option<usize> {
        self.operations.iter().position(|op| op.symbol == symbol)
    }

    pub fn max_arity(&self) -> usize {
        self.operations.iter().map(|op| op.arity).max().unwrap_or(0)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.size as Elem
    }

    pub fn check_element(&self, e: Elem) -> Result<()> {
        if (e as usize) < self.size {
            Ok(())
        } else {
            Err(Error::ElementOutOfRange {
                element: e,
                size: self.size,
            })
        }
    }

    /// Applies the named operation.
    pub fn apply(&self, symbol: &str, args: &[Elem]) -> Result<Elem> {
        let op = self
            .operation(symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
        if op.arity != args.len() {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                arity: op.arity,
                given: args.len(),
            });
        }
        for &a in args {
            self.check_element(a)?;
        }
        Ok(op.apply(args, self.size))
    }

    /// The algebra `A^n` with coordinatewise operations.
    pub fn direct_power(&self, n: usize, limits: &Limits) -> Result<FiniteAlgebra> {
        if n == 0 {
            return Err(Error::Precondition("power exponent must be positive".into()));
        }
        let codec = TupleCodec::new(self.size, n);
        let big = codec
            .len()
            .filter(|&m| m <= limits.universe_cap)
            .ok_or_else(|| Error::CapExceeded {
                what: format!("universe of {}^{}", self.name, n),
                requested: (self.size as u128).saturating_pow(n as u32),
                cap: limits.universe_cap,
            })?;
        for op in &self.operations {
            let cells = checked_pow(big, op.arity).filter(|&c| c <= limits.table_cap);
            if cells.is_none() {
                return Err(Error::CapExceeded {
                    what: format!("table of `{}` on {}^{}", op.symbol, self.name, n),
                    requested: (big as u128).saturating_pow(op.arity as u32),
                    cap: limits.table_cap,
                });
            }
        }
        let operations = self
            .operations
            .iter()
            .map(|op| {
                let mut coords = vec![0; op.arity];
                let mut tuple = vec![0; n];
                let mut decoded: Vec<Vec<Elem>> = vec![vec![0; n]; op.arity];
                Operation::from_fn(op.symbol.clone(), big, op.arity, |args| {
                    for (d, &a) in decoded.iter_mut().zip(args) {
                        codec.decode_into(a as usize, d);
                    }
                    for (i, t) in tuple.iter_mut().enumerate() {
                        for (c, d) in coords.iter_mut().zip(&decoded) {
                            *c = d[i];
                        }
                        *t = op.apply(&coords, self.size);
                    }
                    codec.encode(&tuple) as Elem
                })
            })
            .collect();
        let mut power = FiniteAlgebra::new(format!("{}^{}", self.name, n), big, operations)?;
        if let Some(names) = &self.element_names {
            if n == 1 {
                power.element_names = Some(names.clone());
            }
        }
        Ok(power)
    }

    /// Adds a nullary operation `c{e}` for every element `e`.
    ///
    /// Symbols that would clash with existing ones get a `'` suffix, so
    /// expanding twice adds a second batch with the same tables.
    pub fn constant_expansion(&self) -> FiniteAlgebra {
        let mut operations = self.operations.clone();
        let mut taken: HashSet<String> = operations.iter().map(|o| o.symbol.clone()).collect();
        for e in 0..self.size {
            let mut symbol = format!("c{e}");
            while taken.contains(&symbol) {
                symbol.push('\'');
            }
            taken.insert(symbol.clone());
            operations.push(Operation::new(symbol, 0, vec![e as Elem]));
        }
        FiniteAlgebra {
            name: format!("{}+consts", self.name),
            size: self.size,
            operations,
            element_names: self.element_names.clone(),
        }
    }

    /// The quotient by a congruence. Classes are numbered in increasing order
    /// of their least members; the projection sends each element to the number
    /// of its class.
    pub fn quotient(&self, theta: &Congruence) -> Result<(FiniteAlgebra, Vec<Elem>)> {
        if theta.size() != self.size {
            return Err(Error::Precondition(format!(
                "partition on {} elements applied to algebra of size {}",
                theta.size(),
                self.size
            )));
        }
        theta.check_compatible(self)?;
        let reps = theta.representatives();
        let mut projection = vec![0; self.size];
        for (e, slot) in projection.iter_mut().enumerate() {
            let rep = theta.class_of(e as Elem);
            *slot = reps.binary_search(&rep).expect("representative present") as Elem;
        }
        let q = reps.len();
        let operations = self
            .operations
            .iter()
            .map(|op| {
                let mut lifted = vec![0; op.arity];
                Operation::from_fn(op.symbol.clone(), q, op.arity, |args| {
                    for (l, &a) in lifted.iter_mut().zip(args) {
                        *l = reps[a as usize];
                    }
                    projection[op.apply(&lifted, self.size) as usize]
                })
            })
            .collect();
        let alg = FiniteAlgebra::new(format!("{}/~", self.name), q, operations)?;
        Ok((alg, projection))
    }

    /// Least subuniverse containing `generators`, sorted ascending.
    ///
    /// Nullary operations are always applied, so the closure of the empty set
    /// is the set of values of constant compositions.
    pub fn generate_subuniverse(&self, generators: &[Elem]) -> Result<Vec<Elem>> {
        for &g in generators {
            self.check_element(g)?;
        }
        Ok(crate::closure::close_elements(self, generators))
    }

    /// Whether `subset` is closed under every operation.
    pub fn is_subuniverse(&self, subset: &[Elem]) -> bool {
        let mut member = vec![false; self.size];
        for &s in subset {
            member[s as usize] = true;
        }
        let elems: Vec<Elem> = subset.to_vec();
        if elems.is_empty() {
            return self.operations.iter().all(|op| op.arity > 0);
        }
        for op in &self.operations {
            let codec = TupleCodec::new(elems.len(), op.arity);
            let Some(n) = codec.len() else { return false };
            let mut idx = vec![0; op.arity];
            let mut args = vec![0; op.arity];
            for i in 0..n {
                codec.decode_into(i, &mut idx);
                for (a, &j) in args.iter_mut().zip(&idx) {
                    *a = elems[j as usize];
                }
                if !member[op.apply(&args, self.size) as usize] {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `other` has the same universe size and identical operation
    /// tables, in order (names are ignored).
    pub fn same_tables(&self, other: &FiniteAlgebra) -> bool {
        self.size == other.size
            && self.operations.len() == other.operations.len()
            && self
                .operations
                .iter()
                .zip(&other.operations)
                .all(|(a, b)| a.arity == b.arity && a.table == b.table)
    }

    /// Label of an element: its given name, or its index.
    pub fn element_label(&self, e: Elem) -> String {
        match &self.element_names {
            Some(names) => names[e as usize].clone(),
            None => e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn codec_orders_last_coordinate_fastest() {
        let c = TupleCodec::new(3, 2);
        assert_eq!(c.encode(&[0, 1]), 1);
        assert_eq!(c.encode(&[1, 0]), 3);
        assert_eq!(c.decode(5), vec![1, 2]);
        assert_eq!(c.len(), Some(9));
    }

    #[test]
    fn rejects_bad_tables() {
        let short = Operation::new("f", 2, vec![0, 1, 1]);
        assert!(matches!(
            FiniteAlgebra::new("a", 2, vec![short]),
            Err(Error::TableLength { expected: 4, found: 3, .. })
        ));
        let wide = Operation::new("f", 1, vec![0, 2]);
        assert!(matches!(
            FiniteAlgebra::new("a", 2, vec![wide]),
            Err(Error::EntryOutOfRange { index: 1, value: 2, .. })
        ));
        let dup = vec![Operation::new("f", 0, vec![0]), Operation::new("f", 0, vec![1])];
        assert!(matches!(FiniteAlgebra::new("a", 2, dup), Err(Error::DuplicateSymbol(_))));
    }

    #[test]
    fn z2_square_adds_coordinatewise() {
        let z2 = catalog::z2_group();
        let sq = z2.direct_power(2, &Limits::default()).unwrap();
        assert_eq!(sq.size(), 4);
        let codec = TupleCodec::new(2, 2);
        let a = codec.encode(&[1, 0]) as Elem;
        let b = codec.encode(&[0, 1]) as Elem;
        assert_eq!(sq.apply("+", &[a, b]).unwrap() as usize, codec.encode(&[1, 1]));
    }

    #[test]
    fn power_sizes_and_caps() {
        let a = catalog::example_a();
        assert_eq!(a.direct_power(2, &Limits::default()).unwrap().size(), 64);
        let tight = Limits {
            universe_cap: 32,
            table_cap: 1 << 20,
        };
        assert!(matches!(a.direct_power(2, &tight), Err(Error::CapExceeded { .. })));
        let bxc = catalog::example_bxc();
        assert!(bxc.direct_power(1, &Limits::default()).unwrap().same_tables(&bxc));
    }

    #[test]
    fn constant_expansion_adds_nullaries() {
        let bare = catalog::two_element_bare_set();
        let once = bare.constant_expansion();
        assert_eq!(once.operations().len(), 2);
        assert!(once.operations().iter().all(|o| o.arity() == 0));
        let twice = once.constant_expansion();
        assert_eq!(twice.operations().len(), 4);
        for (a, b) in twice.operations()[..2].iter().zip(&twice.operations()[2..]) {
            assert_eq!(a.table(), b.table());
        }
    }

    #[test]
    fn subuniverse_examples() {
        let z2 = catalog::z2_group();
        let sq = z2.direct_power(2, &Limits::default()).unwrap();
        assert_eq!(sq.generate_subuniverse(&[2, 1]).unwrap(), vec![0, 1, 2, 3]);
        assert!(z2.generate_subuniverse(&[]).unwrap().is_empty());
        // (v,0), (0,0), (0,v) with v = (0,1): indices 4, 0, 1
        let bxc = catalog::example_bxc();
        assert_eq!(bxc.generate_subuniverse(&[4, 0, 1]).unwrap(), vec![0, 1, 4]);
        assert!(bxc.is_subuniverse(&[0, 1, 4]));
        assert!(!bxc.is_subuniverse(&[]));
        assert!(z2.is_subuniverse(&[]));
    }

    #[test]
    fn quotient_by_trivial_partitions() {
        let a = catalog::example_a();
        let (same, proj) = a.quotient(&Congruence::identity(8)).unwrap();
        assert!(same.same_tables(&a));
        assert_eq!(proj, (0..8).collect::<Vec<_>>());
        let (one, proj) = a.quotient(&Congruence::full(8)).unwrap();
        assert_eq!(one.size(), 1);
        assert!(proj.iter().all(|&p| p == 0));
    }
}
