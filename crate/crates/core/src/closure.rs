//! Subpower closure kernel.
//!
//! Given vectors in `A^L`, computes the least subset of `A^L` containing them
//! and closed under the coordinatewise operations of `A`. Every other search in
//! the crate (subuniverses, clones, interpolation, commutator matrices) reduces
//! to this.
//!
//! Expansion is semi-naive: in each round only argument tuples containing at
//! least one vector from the previous round's frontier are evaluated. An
//! operation of arity `k` is applied one argument at a time. After fixing `i`
//! arguments, what remains at each coordinate is a residual function of the
//! other `k - i` arguments; residuals with equal tables are identified, and so
//! are argument values that no residual can tell apart. Partial applications
//! are deduplicated as vectors of residual ids, which keeps high-arity
//! operations on large closures tractable whenever the operation factors
//! through small quotients.

use std::hash::Hash;
use std::sync::Arc;

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap};

use crate::algebra::{checked_pow, FiniteAlgebra};
use crate::budget::ClosureBudget;
use crate::term::Term;
use crate::Elem;

type FxIndexSet<T> = IndexSet<T, FxBuildHasher>;

/// One argument position of an operation, after `position` arguments have
/// been fixed.
#[derive(Debug, Clone)]
struct Level {
    /// Element -> argument class at this position.
    arg_class: Vec<u32>,
    classes: usize,
    /// `parent * classes + class` -> residual id one level down (the value of
    /// the operation at the last level).
    next: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Residuals {
    op: usize,
    levels: Vec<Level>,
}

impl Residuals {
    fn build(alg: &FiniteAlgebra, op: usize) -> Residuals {
        let size = alg.size();
        let operation = &alg.operations()[op];
        let k = operation.arity();
        let table = operation.table();
        // ids[i][prefix] = residual id of the prefix of length i
        let mut ids: Vec<Vec<u32>> = vec![Vec::new(); k + 1];
        ids[k] = table.to_vec();
        let mut counts = vec![0usize; k + 1];
        counts[k] = size;
        for i in (0..k).rev() {
            let prefixes = checked_pow(size, i).expect("table already materialized");
            let mut seen: FxHashMap<&[u32], u32> = FxHashMap::default();
            let child = &ids[i + 1];
            let mut mine = Vec::with_capacity(prefixes);
            for p in 0..prefixes {
                let row = &child[p * size..(p + 1) * size];
                let next = seen.len() as u32;
                mine.push(*seen.entry(row).or_insert(next));
            }
            counts[i] = seen.len();
            drop(seen);
            ids[i] = mine;
        }
        let mut levels = Vec::with_capacity(k);
        for i in 0..k {
            // a representative prefix for every residual at level i
            let mut rep = vec![usize::MAX; counts[i]];
            for (p, &r) in ids[i].iter().enumerate() {
                if rep[r as usize] == usize::MAX {
                    rep[r as usize] = p;
                }
            }
            let child = &ids[i + 1];
            let trans = |r: usize, a: usize| child[rep[r] * size + a];
            let mut col_ids: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
            let mut arg_class = Vec::with_capacity(size);
            let mut class_rep = Vec::new();
            for a in 0..size {
                let col: Vec<u32> = (0..counts[i]).map(|r| trans(r, a)).collect();
                let next = col_ids.len() as u32;
                let id = *col_ids.entry(col).or_insert_with(|| {
                    class_rep.push(a);
                    next
                });
                arg_class.push(id);
            }
            let classes = class_rep.len();
            let mut next = vec![0u32; counts[i] * classes];
            for r in 0..counts[i] {
                for (c, &a) in class_rep.iter().enumerate() {
                    next[r * classes + c] = trans(r, a);
                }
            }
            levels.push(Level {
                arg_class,
                classes,
                next,
            });
        }
        Residuals { op, levels }
    }
}

/// Per-algebra data reused across many closures.
#[derive(Debug, Clone)]
pub struct Prepared {
    alg: Arc<FiniteAlgebra>,
    residuals: Vec<Residuals>,
}

impl Prepared {
    pub fn new(alg: &FiniteAlgebra) -> Arc<Prepared> {
        let residuals = (0..alg.operations().len())
            .filter(|&i| alg.operations()[i].arity() > 0)
            .map(|i| Residuals::build(alg, i))
            .collect();
        Arc::new(Prepared {
            alg: Arc::new(alg.clone()),
            residuals,
        })
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.alg
    }
}

/// How a vector entered the closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    /// Supplied by the caller with this label.
    Generator(u32),
    /// Value of operation `op` at the listed earlier vectors.
    Apply { op: usize, args: Vec<u32> },
}

/// Why a call to [`Subpower::close`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloseOutcome {
    /// No new vectors can be produced.
    Complete,
    /// The target vector was produced; it has this id.
    Target(usize),
    /// The requested number of vectors was reached.
    CountReached,
    /// The budget ran out; the closure is partial.
    Exhausted,
}

#[derive(Debug, Clone, Default)]
pub struct StopWhen {
    pub target: Option<Vec<Elem>>,
    pub count: Option<usize>,
}

trait Cell: Copy + Eq + Hash + Default + Send + Sync + 'static {
    fn from_elem(e: Elem) -> Self;
    fn to_elem(self) -> Elem;
}

impl Cell for u8 {
    fn from_elem(e: Elem) -> Self {
        e as u8
    }
    fn to_elem(self) -> Elem {
        self as Elem
    }
}

impl Cell for u16 {
    fn from_elem(e: Elem) -> Self {
        e as u16
    }
    fn to_elem(self) -> Elem {
        self as Elem
    }
}

impl Cell for u32 {
    fn from_elem(e: Elem) -> Self {
        e
    }
    fn to_elem(self) -> Elem {
        self
    }
}

#[derive(Clone)]
struct Kernel<C: Cell> {
    prep: Arc<Prepared>,
    width: usize,
    store: FxIndexSet<Box<[C]>>,
    origins: Option<Vec<Origin>>,
    /// Start of the frontier not yet expanded.
    expanded: usize,
    nullaries_done: bool,
    rounds: usize,
}

enum Step {
    Continue,
    Stop(CloseOutcome),
}

impl<C: Cell> Kernel<C> {
    fn new(prep: Arc<Prepared>, width: usize, track: bool) -> Self {
        Kernel {
            prep,
            width,
            store: FxIndexSet::default(),
            origins: track.then(Vec::new),
            expanded: 0,
            nullaries_done: false,
            rounds: 0,
        }
    }

    fn insert(&mut self, v: Box<[C]>, origin: impl FnOnce() -> Origin) -> (usize, bool) {
        let (id, fresh) = self.store.insert_full(v);
        if fresh {
            if let Some(o) = &mut self.origins {
                o.push(origin());
            }
        }
        (id, fresh)
    }

    fn check_stop(&self, id: usize, stop: &StopWhen, target: &Option<Box<[C]>>) -> Option<CloseOutcome> {
        if let Some(t) = target {
            if &self.store[id] == t {
                return Some(CloseOutcome::Target(id));
            }
        }
        if stop.count.is_some_and(|c| self.store.len() >= c) {
            return Some(CloseOutcome::CountReached);
        }
        None
    }

    fn close(&mut self, budget: &ClosureBudget, stop: &StopWhen) -> CloseOutcome {
        let target: Option<Box<[C]>> = stop
            .target
            .as_ref()
            .map(|t| t.iter().map(|&e| C::from_elem(e)).collect());
        // the target or count may already be present
        if let Some(t) = &target {
            if let Some(id) = self.store.get_index_of(t) {
                return CloseOutcome::Target(id);
            }
        }
        if stop.count.is_some_and(|c| self.store.len() >= c) {
            return CloseOutcome::CountReached;
        }
        if !self.nullaries_done {
            self.nullaries_done = true;
            let alg = self.prep.alg.clone();
            for (i, op) in alg.operations().iter().enumerate() {
                if op.arity() == 0 {
                    let v: Box<[C]> = vec![C::from_elem(op.table()[0]); self.width].into();
                    let (id, fresh) = self.insert(v, || Origin::Apply { op: i, args: vec![] });
                    if fresh {
                        if let Some(out) = self.check_stop(id, stop, &target) {
                            return out;
                        }
                    }
                }
            }
        }
        loop {
            let old_end = self.expanded;
            let all_end = self.store.len();
            if old_end == all_end {
                return CloseOutcome::Complete;
            }
            if self.rounds >= budget.max_rounds || budget.expired() {
                return CloseOutcome::Exhausted;
            }
            self.rounds += 1;
            let prep = self.prep.clone();
            for res in &prep.residuals {
                let k = res.levels.len();
                for first in 0..k {
                    if first > 0 && old_end == 0 {
                        continue;
                    }
                    let ranges: Vec<(usize, usize)> = (0..k)
                        .map(|i| match i.cmp(&first) {
                            std::cmp::Ordering::Less => (0, old_end),
                            std::cmp::Ordering::Equal => (old_end, all_end),
                            std::cmp::Ordering::Greater => (0, all_end),
                        })
                        .collect();
                    if let Step::Stop(out) = self.join(res, &ranges, budget, stop, &target) {
                        return out;
                    }
                }
            }
            self.expanded = all_end;
        }
    }

    /// Applies one operation to all argument tuples drawn from `ranges`.
    fn join(
        &mut self,
        res: &Residuals,
        ranges: &[(usize, usize)],
        budget: &ClosureBudget,
        stop: &StopWhen,
        target: &Option<Box<[C]>>,
    ) -> Step {
        let width = self.width;
        // states after fixing i arguments, with back pointers
        let mut states: FxIndexSet<Box<[u32]>> = FxIndexSet::default();
        states.insert(vec![0u32; width].into());
        let mut backs: Vec<Vec<(u32, u32)>> = Vec::with_capacity(ranges.len());
        let mut work: usize = 0;
        for (level, &(lo, hi)) in res.levels.iter().zip(ranges) {
            let mut classes: FxIndexSet<Box<[u32]>> = FxIndexSet::default();
            let mut class_rep: Vec<u32> = Vec::new();
            for id in lo..hi {
                let cv: Box<[u32]> = self.store[id]
                    .iter()
                    .map(|c| level.arg_class[c.to_elem() as usize])
                    .collect();
                if classes.insert(cv) {
                    class_rep.push(id as u32);
                }
            }
            let mut next_states: FxIndexSet<Box<[u32]>> = FxIndexSet::default();
            let mut back = Vec::new();
            let mut buf = vec![0u32; width];
            for (s_idx, s) in states.iter().enumerate() {
                for (c_idx, cv) in classes.iter().enumerate() {
                    for ((b, &r), &c) in buf.iter_mut().zip(s.iter()).zip(cv.iter()) {
                        *b = level.next[r as usize * level.classes + c as usize];
                    }
                    if !next_states.contains(&buf[..]) {
                        next_states.insert(buf.clone().into());
                        back.push((s_idx as u32, class_rep[c_idx]));
                        if next_states.len() > budget.max_elements {
                            return Step::Stop(CloseOutcome::Exhausted);
                        }
                    }
                    work += width;
                    if work > (1 << 22) {
                        work = 0;
                        if budget.expired() {
                            return Step::Stop(CloseOutcome::Exhausted);
                        }
                    }
                }
            }
            backs.push(back);
            states = next_states;
        }
        let k = ranges.len();
        for (final_idx, s) in states.iter().enumerate() {
            let v: Box<[C]> = s.iter().map(|&e| C::from_elem(e)).collect();
            if self.store.contains(&v) {
                continue;
            }
            let origin = || {
                let mut args = vec![0u32; k];
                let mut idx = final_idx;
                for level in (0..k).rev() {
                    let (parent, arg) = backs[level][idx];
                    args[level] = arg;
                    idx = parent as usize;
                }
                Origin::Apply { op: res.op, args }
            };
            let (id, _) = self.insert(v, origin);
            if let Some(out) = self.check_stop(id, stop, target) {
                return Step::Stop(out);
            }
            if self.store.len() > budget.max_elements {
                return Step::Stop(CloseOutcome::Exhausted);
            }
        }
        Step::Continue
    }
}

#[derive(Clone)]
enum Inner {
    Small(Kernel<u8>),
    Medium(Kernel<u16>),
    Large(Kernel<u32>),
}

macro_rules! dispatch {
    ($self:expr, $k:ident => $body:expr) => {
        match &$self.inner {
            Inner::Small($k) => $body,
            Inner::Medium($k) => $body,
            Inner::Large($k) => $body,
        }
    };
    (mut $self:expr, $k:ident => $body:expr) => {
        match &mut $self.inner {
            Inner::Small($k) => $body,
            Inner::Medium($k) => $body,
            Inner::Large($k) => $body,
        }
    };
}

/// A subuniverse of `A^width` under construction.
#[derive(Clone)]
pub struct Subpower {
    inner: Inner,
}

impl Subpower {
    /// `track` records an [`Origin`] for every vector so that witnesses can be
    /// rebuilt.
    pub fn new(prep: Arc<Prepared>, width: usize, track: bool) -> Self {
        let size = prep.alg.size();
        let inner = if size <= 1 << 8 {
            Inner::Small(Kernel::new(prep, width, track))
        } else if size <= 1 << 16 {
            Inner::Medium(Kernel::new(prep, width, track))
        } else {
            Inner::Large(Kernel::new(prep, width, track))
        };
        Subpower { inner }
    }

    pub fn width(&self) -> usize {
        dispatch!(self, k => k.width)
    }

    pub fn len(&self) -> usize {
        dispatch!(self, k => k.store.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rounds(&self) -> usize {
        dispatch!(self, k => k.rounds)
    }

    /// Adds a generator; returns its id and whether it was new.
    pub fn add_generator(&mut self, v: &[Elem], label: u32) -> (usize, bool) {
        assert_eq!(v.len(), self.width());
        dispatch!(mut self, k => {
            let b = v.iter().map(|&e| Cell::from_elem(e)).collect();
            k.insert(b, || Origin::Generator(label))
        })
    }

    pub fn close(&mut self, budget: &ClosureBudget, stop: &StopWhen) -> CloseOutcome {
        dispatch!(mut self, k => k.close(budget, stop))
    }

    pub fn vector(&self, id: usize) -> Vec<Elem> {
        dispatch!(self, k => k.store[id].iter().map(|c| c.to_elem()).collect())
    }

    pub fn value(&self, id: usize, coord: usize) -> Elem {
        dispatch!(self, k => k.store[id][coord].to_elem())
    }

    pub fn position(&self, v: &[Elem]) -> Option<usize> {
        dispatch!(self, k => {
            let b: Box<[_]> = v.iter().map(|&e| Cell::from_elem(e)).collect();
            k.store.get_index_of(&b)
        })
    }

    pub fn vectors(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        (0..self.len()).map(move |i| self.vector(i))
    }

    pub fn origin(&self, id: usize) -> Option<&Origin> {
        dispatch!(self, k => k.origins.as_ref().map(|o| &o[id]))
    }

    /// Rebuilds derivation terms for every vector, in id order.
    ///
    /// `leaf` turns a generator label into a term. Panics if origins were not
    /// tracked.
    pub fn terms(&self, leaf: &dyn Fn(u32) -> Arc<Term>) -> Vec<Arc<Term>> {
        let prep = dispatch!(self, k => k.prep.clone());
        let alg = prep.algebra();
        let n = self.len();
        let mut out: Vec<Arc<Term>> = Vec::with_capacity(n);
        for id in 0..n {
            let t = match self.origin(id).expect("origins not tracked") {
                Origin::Generator(label) => leaf(*label),
                Origin::Apply { op, args } => Term::apply(
                    alg.operations()[*op].symbol(),
                    args.iter().map(|&a| out[a as usize].clone()).collect(),
                ),
            };
            out.push(t);
        }
        out
    }

    /// Derivation term of a single vector.
    pub fn term(&self, id: usize, leaf: &dyn Fn(u32) -> Arc<Term>) -> Arc<Term> {
        let prep = dispatch!(self, k => k.prep.clone());
        let alg = prep.algebra();
        let mut memo: FxHashMap<usize, Arc<Term>> = FxHashMap::default();
        let mut stack = vec![(id, false)];
        while let Some((cur, expanded)) = stack.pop() {
            if memo.contains_key(&cur) {
                continue;
            }
            match self.origin(cur).expect("origins not tracked") {
                Origin::Generator(label) => {
                    memo.insert(cur, leaf(*label));
                }
                Origin::Apply { op, args } => {
                    if expanded {
                        let t = Term::apply(
                            alg.operations()[*op].symbol(),
                            args.iter().map(|a| memo[&(*a as usize)].clone()).collect(),
                        );
                        memo.insert(cur, t);
                    } else {
                        stack.push((cur, true));
                        for &a in args {
                            if !memo.contains_key(&(a as usize)) {
                                stack.push((a as usize, false));
                            }
                        }
                    }
                }
            }
        }
        memo.remove(&id).expect("term built")
    }
}

/// Subuniverse of `alg` generated by `generators`, sorted.
pub(crate) fn close_elements(alg: &FiniteAlgebra, generators: &[Elem]) -> Vec<Elem> {
    let prep = Prepared::new(alg);
    let mut sp = Subpower::new(prep, 1, false);
    for &g in generators {
        sp.add_generator(&[g], 0);
    }
    let budget = ClosureBudget {
        max_elements: usize::MAX,
        max_rounds: usize::MAX,
        deadline: None,
    };
    let stop = StopWhen {
        target: None,
        count: Some(alg.size()),
    };
    sp.close(&budget, &stop);
    let mut out: Vec<Elem> = sp.vectors().map(|v| v[0]).collect();
    out.sort_unstable();
    out
}

/// Closure of a set of vectors without witness tracking; returns the sorted
/// list of vectors and whether it is complete.
pub fn close_vectors(
    prep: &Arc<Prepared>,
    width: usize,
    generators: &[Vec<Elem>],
    budget: &ClosureBudget,
) -> (Vec<Vec<Elem>>, bool) {
    let mut sp = Subpower::new(prep.clone(), width, false);
    for g in generators {
        sp.add_generator(g, 0);
    }
    let full = checked_pow(prep.alg.size(), width);
    let stop = StopWhen {
        target: None,
        count: full,
    };
    let outcome = sp.close(budget, &stop);
    let mut out: Vec<Vec<Elem>> = sp.vectors().collect();
    out.sort_unstable();
    (out, outcome != CloseOutcome::Exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Operation, TupleCodec};
    use crate::catalog;

    /// Naive closure: apply every operation to every tuple until stable.
    fn naive(alg: &FiniteAlgebra, width: usize, gens: &[Vec<Elem>]) -> Vec<Vec<Elem>> {
        let mut set: std::collections::BTreeSet<Vec<Elem>> = gens.iter().cloned().collect();
        loop {
            let cur: Vec<Vec<Elem>> = set.iter().cloned().collect();
            let before = set.len();
            for op in alg.operations() {
                let codec = TupleCodec::new(cur.len(), op.arity());
                for t in 0..codec.len().unwrap() {
                    let idx = codec.decode(t);
                    let v: Vec<Elem> = (0..width)
                        .map(|l| {
                            let args: Vec<Elem> = idx.iter().map(|&i| cur[i as usize][l]).collect();
                            op.apply(&args, alg.size())
                        })
                        .collect();
                    set.insert(v);
                }
            }
            if set.len() == before {
                return set.into_iter().collect();
            }
        }
    }

    #[test]
    fn matches_naive_on_catalog() {
        for alg in [catalog::z4_group(), catalog::example_b(), catalog::two_element_lattice()] {
            let prep = Prepared::new(&alg);
            let n = alg.size() as Elem;
            let gens = vec![vec![0, 1 % n], vec![1 % n, 1 % n]];
            let (got, complete) = close_vectors(&prep, 2, &gens, &ClosureBudget::default());
            assert!(complete);
            assert_eq!(got, naive(&alg, 2, &gens), "{}", alg.name());
        }
    }

    #[test]
    fn witnesses_replay() {
        let alg = catalog::example_bxc();
        let prep = Prepared::new(&alg);
        let mut sp = Subpower::new(prep, 2, true);
        sp.add_generator(&[4, 1], 0);
        sp.add_generator(&[1, 4], 1);
        assert_eq!(sp.close(&ClosureBudget::default(), &StopWhen::default()), CloseOutcome::Complete);
        let gens = [[4, 1], [1, 4]];
        let terms = sp.terms(&|l| Term::var(l as usize));
        for (id, t) in terms.iter().enumerate() {
            for coord in 0..2 {
                let env: Vec<Elem> = gens.iter().map(|g| g[coord]).collect();
                assert_eq!(t.eval(&alg, &env).unwrap(), sp.value(id, coord));
            }
        }
        let single = sp.term(sp.len() - 1, &|l| Term::var(l as usize));
        assert_eq!(single.eval(&alg, &[4, 1]).unwrap(), sp.value(sp.len() - 1, 0));
    }

    #[test]
    fn nullary_only() {
        let alg = FiniteAlgebra::new("c", 3, vec![Operation::new("k", 0, vec![2])]).unwrap();
        assert_eq!(close_elements(&alg, &[]), vec![2]);
    }

    #[test]
    fn target_stops_early() {
        let z2 = catalog::z2_group();
        let prep = Prepared::new(&z2);
        let mut sp = Subpower::new(prep, 2, true);
        sp.add_generator(&[0, 1], 0);
        sp.add_generator(&[1, 1], 1);
        let stop = StopWhen {
            target: Some(vec![1, 0]),
            count: None,
        };
        assert!(matches!(sp.close(&ClosureBudget::default(), &stop), CloseOutcome::Target(_)));
    }
}
