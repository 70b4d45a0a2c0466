//! Congruences and congruence lattices.

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use indexmap::IndexSet;
use rustc_hash::FxHashSet;

use crate::algebra::{checked_pow, FiniteAlgebra, TupleCodec};
use crate::budget::Completeness;
use crate::error::{Error, Result};
use crate::Elem;

/// An equivalence relation on `0..size`, stored as the least member of each
/// element's class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    class: Vec<Elem>,
}

impl Congruence {
    pub fn identity(size: usize) -> Self {
        Congruence {
            class: (0..size as Elem).collect(),
        }
    }

    pub fn full(size: usize) -> Self {
        Congruence {
            class: vec![0; size],
        }
    }

    /// Partition from arbitrary class labels (equal labels, same class).
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut first = std::collections::HashMap::new();
        let class = labels
            .iter()
            .enumerate()
            .map(|(i, l)| *first.entry(*l).or_insert(i as Elem))
            .collect();
        Congruence { class }
    }

    /// Partition from a list of blocks; elements not mentioned are singletons.
    pub fn from_blocks(size: usize, blocks: &[Vec<Elem>]) -> Self {
        let mut uf = UnionFind::new(size);
        for b in blocks {
            for w in b.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        uf.into_congruence()
    }

    pub fn size(&self) -> usize {
        self.class.len()
    }

    pub fn class_of(&self, e: Elem) -> Elem {
        self.class[e as usize]
    }

    pub fn related(&self, a: Elem, b: Elem) -> bool {
        self.class[a as usize] == self.class[b as usize]
    }

    pub fn labels(&self) -> &[Elem] {
        &self.class
    }

    /// Least members of the classes, ascending.
    pub fn representatives(&self) -> Vec<Elem> {
        self.class
            .iter()
            .enumerate()
            .filter(|(i, &c)| *i as Elem == c)
            .map(|(_, &c)| c)
            .collect()
    }

    pub fn num_classes(&self) -> usize {
        self.representatives().len()
    }

    /// Classes in order of least member, each sorted.
    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        let reps = self.representatives();
        let mut out = vec![Vec::new(); reps.len()];
        for (e, &c) in self.class.iter().enumerate() {
            let i = reps.binary_search(&c).expect("class label is a representative");
            out[i].push(e as Elem);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.class.iter().enumerate().all(|(i, &c)| i as Elem == c)
    }

    pub fn is_full(&self) -> bool {
        self.class.iter().all(|&c| c == 0)
    }

    pub fn leq(&self, other: &Congruence) -> bool {
        self.class
            .iter()
            .enumerate()
            .all(|(i, &c)| other.class[i] == other.class[c as usize])
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let labels: Vec<usize> = self
            .class
            .iter()
            .zip(&other.class)
            .map(|(&a, &b)| a as usize * self.size() + b as usize)
            .collect();
        Congruence::from_labels(&labels)
    }

    /// Join in the lattice of equivalence relations.
    pub fn partition_join(&self, other: &Congruence) -> Congruence {
        let mut uf = UnionFind::new(self.size());
        for (i, (&a, &b)) in self.class.iter().zip(&other.class).enumerate() {
            uf.union(i as Elem, a);
            uf.union(i as Elem, b);
        }
        uf.into_congruence()
    }

    /// All related pairs `(a, b)`, including `a == b`.
    pub fn pairs(&self) -> Vec<(Elem, Elem)> {
        let mut out = Vec::new();
        for block in self.blocks() {
            for &a in &block {
                for &b in &block {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks that every operation preserves the relation.
    pub fn check_compatible(&self, alg: &FiniteAlgebra) -> Result<()> {
        let size = alg.size();
        for op in alg.operations() {
            let codec = TupleCodec::new(size, op.arity());
            let n = codec.len().ok_or_else(|| Error::CapExceeded {
                what: format!("compatibility check of `{}`", op.symbol()),
                requested: u128::MAX,
                cap: usize::MAX,
            })?;
            // it suffices to vary one argument at a time
            let mut args = vec![0; op.arity()];
            for t in 0..n {
                codec.decode_into(t, &mut args);
                let base = op.apply(&args, size);
                for pos in 0..op.arity() {
                    let orig = args[pos];
                    if self.class[orig as usize] != orig {
                        continue;
                    }
                    for e in 0..size as Elem {
                        if e != orig && self.related(e, orig) {
                            args[pos] = e;
                            let v = op.apply(&args, size);
                            if !self.related(base, v) {
                                let right = args.clone();
                                args[pos] = orig;
                                return Err(Error::IncompatiblePartition {
                                    symbol: op.symbol().to_string(),
                                    left: args.clone(),
                                    right,
                                    left_value: base,
                                    right_value: v,
                                });
                            }
                        }
                    }
                    args[pos] = orig;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| {
                let items: Vec<String> = b.iter().map(|e| e.to_string()).collect();
                items.join(",")
            })
            .collect();
        write!(f, "|{}|", blocks.join("|"))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<Elem>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as Elem).collect(),
        }
    }

    pub(crate) fn from_congruence(c: &Congruence) -> Self {
        UnionFind {
            parent: c.class.clone(),
        }
    }

    pub(crate) fn find(&mut self, mut x: Elem) -> Elem {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    /// Merges the classes, keeping the smaller root. Returns false if they were
    /// already merged.
    pub(crate) fn union(&mut self, a: Elem, b: Elem) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }

    pub(crate) fn into_congruence(mut self) -> Congruence {
        let n = self.parent.len();
        let class = (0..n as Elem).map(|i| self.find(i)).collect();
        Congruence { class }
    }
}

/// The distinct non-constant, non-identity basic translations of an algebra,
/// i.e. maps `x -> f(c_1, ..., x, ..., c_k)`.
#[derive(Debug, Clone)]
pub struct Translations {
    size: usize,
    maps: Vec<Vec<Elem>>,
}

/// Refuse to enumerate more translation candidates than this.
const TRANSLATION_WORK_CAP: u128 = 1 << 28;

impl Translations {
    pub fn new(alg: &FiniteAlgebra) -> Result<Self> {
        let size = alg.size();
        let mut seen: FxHashSet<Vec<Elem>> = FxHashSet::default();
        let identity: Vec<Elem> = (0..size as Elem).collect();
        for op in alg.operations() {
            let k = op.arity();
            if k == 0 {
                continue;
            }
            let work = (size as u128).saturating_pow(k as u32) * k as u128;
            if work > TRANSLATION_WORK_CAP {
                return Err(Error::CapExceeded {
                    what: format!("translations of `{}`", op.symbol()),
                    requested: work,
                    cap: TRANSLATION_WORK_CAP as usize,
                });
            }
            let others = TupleCodec::new(size, k - 1);
            let m = checked_pow(size, k - 1).expect("bounded above");
            let mut rest = vec![0; k - 1];
            let mut args = vec![0; k];
            for pos in 0..k {
                for t in 0..m {
                    others.decode_into(t, &mut rest);
                    args[..pos].copy_from_slice(&rest[..pos]);
                    args[pos + 1..].copy_from_slice(&rest[pos..]);
                    let map: Vec<Elem> = (0..size as Elem)
                        .map(|x| {
                            args[pos] = x;
                            op.apply(&args, size)
                        })
                        .collect();
                    if map != identity && map.iter().any(|&v| v != map[0]) {
                        seen.insert(map);
                    }
                }
            }
        }
        let mut maps: Vec<Vec<Elem>> = seen.into_iter().collect();
        maps.sort_unstable();
        Ok(Translations { size, maps })
    }

    pub fn maps(&self) -> &[Vec<Elem>] {
        &self.maps
    }

    /// Least congruence containing `base` and the given pairs.
    pub fn generate(&self, base: Option<&Congruence>, pairs: &[(Elem, Elem)]) -> Congruence {
        let mut uf = match base {
            Some(c) => UnionFind::from_congruence(c),
            None => UnionFind::new(self.size),
        };
        let mut work: Vec<(Elem, Elem)> = Vec::new();
        if let Some(c) = base {
            for (i, &r) in c.class.iter().enumerate() {
                if r != i as Elem {
                    work.push((r, i as Elem));
                }
            }
        }
        for &(a, b) in pairs {
            if uf.union(a, b) {
                work.push((a, b));
            }
        }
        while let Some((a, b)) = work.pop() {
            for t in &self.maps {
                let (x, y) = (t[a as usize], t[b as usize]);
                if uf.union(x, y) {
                    work.push((x, y));
                }
            }
        }
        uf.into_congruence()
    }

    pub fn principal(&self, a: Elem, b: Elem) -> Congruence {
        self.generate(None, &[(a, b)])
    }

    /// Join in the congruence lattice.
    pub fn join(&self, x: &Congruence, y: &Congruence) -> Congruence {
        let seed = x.partition_join(y);
        self.generate(Some(&seed), &[])
    }
}

/// Least congruence identifying `a` and `b`.
pub fn principal_congruence(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<Congruence> {
    alg.check_element(a)?;
    alg.check_element(b)?;
    Ok(Translations::new(alg)?.principal(a, b))
}

/// Least congruence containing all listed pairs.
pub fn generated_congruence(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Result<Congruence> {
    for &(a, b) in pairs {
        alg.check_element(a)?;
        alg.check_element(b)?;
    }
    Ok(Translations::new(alg)?.generate(None, pairs))
}

/// The congruence lattice with its order and covering pairs.
#[derive(Debug, Clone)]
pub struct CongruenceLattice {
    congruences: Vec<Congruence>,
    leq: Vec<Vec<bool>>,
    covers: Vec<(usize, usize)>,
    completeness: Completeness,
}

impl CongruenceLattice {
    /// Congruences ordered by decreasing number of classes, then by labels;
    /// index 0 is the identity and the last index the full relation.
    pub fn congruences(&self) -> &[Congruence] {
        &self.congruences
    }

    pub fn len(&self) -> usize {
        self.congruences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.congruences.is_empty()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// Covering pairs `(lower, upper)`.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn completeness(&self) -> Completeness {
        self.completeness
    }

    pub fn index_of(&self, c: &Congruence) -> Option<usize> {
        self.congruences.iter().position(|x| x == c)
    }

    pub fn bottom(&self) -> usize {
        0
    }

    pub fn top(&self) -> usize {
        self.congruences.len() - 1
    }

    pub fn meet(&self, i: usize, j: usize) -> Option<usize> {
        self.index_of(&self.congruences[i].meet(&self.congruences[j]))
    }

    pub fn join(&self, i: usize, j: usize) -> Option<usize> {
        self.index_of(&self.congruences[i].partition_join(&self.congruences[j]))
    }

    /// Lower covers of the top.
    pub fn coatoms(&self) -> Vec<usize> {
        let top = self.top();
        self.covers
            .iter()
            .filter(|&&(_, hi)| hi == top)
            .map(|&(lo, _)| lo)
            .collect()
    }
}

/// Computes `Con(alg)` by closing the principal congruences under joins.
///
/// At most `max_congruences` are produced; beyond that the result is flagged
/// partial.
pub fn congruence_lattice(alg: &FiniteAlgebra, max_congruences: usize) -> Result<CongruenceLattice> {
    let tr = Translations::new(alg)?;
    lattice_with(alg.size(), &tr, max_congruences)
}

/// Every congruence as a join of principal ones, without the order, sorted
/// by decreasing number of classes.
pub(crate) fn enumerate_congruences(
    size: usize,
    tr: &Translations,
    max_congruences: usize,
) -> (Vec<Congruence>, Completeness) {
    let mut principals: BTreeSet<Congruence> = BTreeSet::new();
    for a in 0..size as Elem {
        for b in a + 1..size as Elem {
            principals.insert(tr.principal(a, b));
        }
    }
    let principals: Vec<Congruence> = principals.into_iter().collect();
    let mut all: IndexSet<Congruence> = IndexSet::new();
    all.insert(Congruence::identity(size));
    for p in &principals {
        all.insert(p.clone());
    }
    let mut completeness = Completeness::Complete;
    let mut start = 1;
    'outer: while start < all.len() {
        let end = all.len();
        for i in start..end {
            for p in &principals {
                let j = all[i].partition_join(p);
                all.insert(j);
                if all.len() > max_congruences {
                    completeness = Completeness::Partial;
                    break 'outer;
                }
            }
        }
        start = end;
    }
    let mut congruences: Vec<Congruence> = all.into_iter().collect();
    if !congruences.iter().any(|c| c.is_full()) {
        congruences.push(Congruence::full(size));
    }
    congruences.sort_by(|a, b| {
        b.num_classes()
            .cmp(&a.num_classes())
            .then_with(|| a.class.cmp(&b.class))
    });
    congruences.dedup();
    (congruences, completeness)
}

pub(crate) fn lattice_with(size: usize, tr: &Translations, max_congruences: usize) -> Result<CongruenceLattice> {
    let (congruences, completeness) = enumerate_congruences(size, tr, max_congruences);
    let n = congruences.len();
    let leq: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| congruences[i].leq(&congruences[j])).collect())
        .collect();
    let mut up = vec![FixedBitSet::with_capacity(n); n];
    let mut down = vec![FixedBitSet::with_capacity(n); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && leq[i][j] {
                up[i].insert(j);
                down[j].insert(i);
            }
        }
    }
    let mut covers = Vec::new();
    for i in 0..n {
        for j in up[i].ones() {
            if up[i].is_disjoint(&down[j]) {
                covers.push((i, j));
            }
        }
    }
    Ok(CongruenceLattice {
        congruences,
        leq,
        covers,
        completeness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    /// Every partition of `0..n`, by restricted growth strings.
    pub(crate) fn all_partitions(n: usize) -> Vec<Congruence> {
        fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Congruence>) {
            if i == n {
                out.push(Congruence::from_labels(cur));
                return;
            }
            for l in 0..=max + 1 {
                cur.push(l);
                rec(i + 1, n, cur, max.max(l), out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut cur = vec![0];
        rec(1, n, &mut cur, 0, &mut out);
        out
    }

    fn brute_congruences(alg: &FiniteAlgebra) -> Vec<Congruence> {
        all_partitions(alg.size())
            .into_iter()
            .filter(|p| p.check_compatible(alg).is_ok())
            .collect()
    }

    #[test]
    fn principal_in_z4() {
        let z4 = catalog::z4_group();
        let cg = principal_congruence(&z4, 0, 2).unwrap();
        assert_eq!(cg.blocks(), vec![vec![0, 2], vec![1, 3]]);
        // brute force: least compatible partition relating 0 and 2
        let least = brute_congruences(&z4)
            .into_iter()
            .filter(|c| c.related(0, 2))
            .min_by_key(|c| std::cmp::Reverse(c.num_classes()))
            .unwrap();
        assert_eq!(least, cg);
        assert!(principal_congruence(&z4, 1, 1).unwrap().is_identity());
    }

    #[test]
    fn lattice_matches_brute_force() {
        for alg in [
            catalog::z4_group(),
            catalog::z3_group(),
            catalog::two_element_lattice(),
            catalog::example_b(),
            catalog::example_a(),
        ] {
            let lat = congruence_lattice(&alg, 10_000).unwrap();
            let mut brute = brute_congruences(&alg);
            brute.sort();
            let mut got = lat.congruences().to_vec();
            got.sort();
            assert_eq!(got, brute, "{}", alg.name());
        }
    }

    #[test]
    fn example_a_beta_is_principal() {
        let a = catalog::example_a();
        let beta = principal_congruence(&a, 0, 1).unwrap();
        assert_eq!(beta.blocks(), vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
    }

    #[test]
    fn incompatible_partition_reports_operation() {
        let z4 = catalog::z4_group();
        let bad = Congruence::from_blocks(4, &[vec![0, 1]]);
        match bad.check_compatible(&z4) {
            Err(Error::IncompatiblePartition { symbol, .. }) => assert_eq!(symbol, "+"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(z4.quotient(&bad).is_err());
    }

    #[test]
    fn lattice_is_closed_and_covers_are_reduction() {
        let lat = congruence_lattice(&catalog::example_bxc(), 10_000).unwrap();
        let n = lat.len();
        let tr = Translations::new(&catalog::example_bxc()).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!(lat.meet(i, j).is_some());
                assert!(lat.join(i, j).is_some());
                let a = &lat.congruences()[i];
                let b = &lat.congruences()[j];
                assert_eq!(tr.join(a, b), a.partition_join(b));
            }
        }
        for &(lo, hi) in lat.covers() {
            assert!(lat.leq(lo, hi) && lo != hi);
        }
    }

    #[test]
    fn trivial_algebra_has_one_congruence() {
        let one = FiniteAlgebra::new("one", 1, vec![]).unwrap();
        assert_eq!(congruence_lattice(&one, 10).unwrap().len(), 1);
    }
}
