//! Exact values of `d_A(n)`, the least size of a generating set of `A^n`,
//! and checks of the identities and bounds it satisfies.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{checked_pow, FiniteAlgebra, Operation, TupleCodec};
use crate::budget::{ClosureBudget, Completeness, Limits};
use crate::clone::induced_polynomials;
use crate::closure::{close_vectors, CloseOutcome, Prepared, StopWhen, Subpower};
use crate::clone::unary_polynomial_clone;
use crate::congruence::{congruence_lattice, CongruenceLattice};
use crate::error::{Error, Result};
use crate::structure::spread::spread_check;
use crate::tct::neighborhoods;
use crate::Elem;

/// Largest power searched exhaustively by default.
pub const GROWTH_UNIVERSE_CAP: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DValue {
    Exact(usize),
    Interval { lower: usize, upper: usize },
}

impl DValue {
    pub fn lower(self) -> usize {
        match self {
            DValue::Exact(v) => v,
            DValue::Interval { lower, .. } => lower,
        }
    }

    pub fn upper(self) -> usize {
        match self {
            DValue::Exact(v) => v,
            DValue::Interval { upper, .. } => upper,
        }
    }

    pub fn exact(self) -> Option<usize> {
        match self {
            DValue::Exact(v) => Some(v),
            DValue::Interval { .. } => None,
        }
    }
}

impl std::fmt::Display for DValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DValue::Exact(v) => write!(f, "{v}"),
            DValue::Interval { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrowthEntry {
    pub n: usize,
    pub value: DValue,
    /// A generating set of `A^n` of size `value.upper()`.
    pub witness: Vec<Vec<Elem>>,
    pub notes: Vec<String>,
}

impl GrowthEntry {
    pub fn completeness(&self) -> Completeness {
        match self.value {
            DValue::Exact(_) => Completeness::Complete,
            DValue::Interval { .. } => Completeness::Partial,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub algebra: String,
    pub size: usize,
    pub entries: Vec<GrowthEntry>,
}

impl GrowthReport {
    pub fn value(&self, n: usize) -> Option<DValue> {
        self.entries.iter().find(|e| e.n == n).map(|e| e.value)
    }

    pub fn exact_points(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .filter_map(|e| e.value.exact().map(|v| (e.n, v)))
            .collect()
    }
}

/// `⌈log_size(n)⌉`, and 0 for a one-element algebra.
pub fn log_lower_bound(size: usize, n: usize) -> usize {
    if size <= 1 {
        return 0;
    }
    let mut k = 0;
    let mut p: u128 = 1;
    while p < n as u128 {
        p *= size as u128;
        k += 1;
    }
    k
}

/// Whether `⌈log_size(n)⌉ ≤ value ≤ size^n`.
pub fn within_general_bounds(size: usize, n: usize, value: usize) -> bool {
    let upper = (size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    log_lower_bound(size, n) <= value && value as u128 <= upper
}

fn power_size(alg: &FiniteAlgebra, n: usize, cap: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Precondition("power exponent must be positive".into()));
    }
    TupleCodec::new(alg.size(), n)
        .len()
        .filter(|&m| m <= cap)
        .ok_or_else(|| Error::CapExceeded {
            what: format!("universe of {}^{}", alg.name(), n),
            requested: (alg.size() as u128).saturating_pow(n as u32),
            cap,
        })
}

struct Search<'a> {
    codec: TupleCodec,
    total: usize,
    budget: &'a ClosureBudget,
    /// The least element in the orbit of each element under permutations
    /// of coordinates: the sorted tuple.
    canon: Vec<usize>,
}

/// Work done below one first generator. Each walk has its own node cap, so
/// the outcome does not depend on how walks are scheduled.
struct Walk {
    nodes: usize,
    cap: usize,
    exhausted: bool,
}

impl Search<'_> {
    fn stop(&self) -> StopWhen {
        StopWhen {
            target: None,
            count: Some(self.total),
        }
    }

    fn extend(&self, walk: &mut Walk, sp: &Subpower, x: usize) -> Option<Subpower> {
        let mut child = sp.clone();
        child.add_generator(&self.codec.decode(x), 0);
        let outcome = child.close(self.budget, &self.stop());
        walk.nodes += 1;
        if outcome == CloseOutcome::Exhausted {
            walk.exhausted = true;
            return None;
        }
        Some(child)
    }

    fn out_of_budget(&self, walk: &mut Walk) -> bool {
        if walk.nodes >= walk.cap || self.budget.expired() {
            walk.exhausted = true;
        }
        walk.exhausted
    }

    /// Extends `chosen` by `remaining` elements above `start`, each outside
    /// the closure of the ones before it.
    fn dfs(
        &self,
        walk: &mut Walk,
        sp: &Subpower,
        chosen: &mut Vec<usize>,
        start: usize,
        remaining: usize,
    ) -> Option<Vec<usize>> {
        for x in start..self.total {
            if self.total - x < remaining || self.out_of_budget(walk) {
                return None;
            }
            if self.canon[x] < chosen[0] || sp.position(&self.codec.decode(x)).is_some() {
                continue;
            }
            let Some(child) = self.extend(walk, sp, x) else { continue };
            chosen.push(x);
            if child.len() == self.total {
                return Some(chosen.clone());
            }
            if remaining > 1 {
                if let Some(found) = self.dfs(walk, &child, chosen, x + 1, remaining - 1) {
                    return Some(found);
                }
            }
            chosen.pop();
        }
        None
    }
}

enum SizeSearch {
    Found(Vec<usize>),
    FoundVectors(Vec<Vec<Elem>>),
    None,
    Unknown,
}

/// Looks for a generating set of size `s`, listed in increasing order.
/// Coordinate permutations preserve generation, so it suffices to find the
/// least set of each orbit. Its first element is then a sorted tuple, and no
/// other element sorts below the first. The node cap of the budget is split
/// evenly between first generators.
fn search_size(search: &Search, base: &Subpower, s: usize) -> SizeSearch {
    let reps: Vec<usize> = (0..search.total)
        .filter(|&x| {
            let t = search.codec.decode(x);
            search.canon[x] == x && base.position(&t).is_none()
        })
        .collect();
    let cap = (search.budget.max_elements / reps.len().max(1)).max(1);
    let exhausted = AtomicBool::new(false);
    let found = reps.par_iter().find_map_first(|&r| {
        let mut walk = Walk {
            nodes: 0,
            cap,
            exhausted: false,
        };
        let result = search.extend(&mut walk, base, r).and_then(|child| {
            let mut chosen = vec![r];
            if child.len() == search.total {
                Some(chosen)
            } else if s > 1 {
                search.dfs(&mut walk, &child, &mut chosen, r + 1, s - 1)
            } else {
                None
            }
        });
        if walk.exhausted {
            exhausted.store(true, Ordering::Relaxed);
        }
        result
    });
    match found {
        Some(w) => SizeSearch::Found(w),
        None if exhausted.load(Ordering::Relaxed) => SizeSearch::Unknown,
        None => SizeSearch::None,
    }
}

const ROW_NOTE: &str = "searched over rows of the free algebra";

/// Largest `|A|^s` for which the search over rows is tried.
const ROW_POINTS_CAP: usize = 1 << 12;
/// Cells of the `s`-generated free algebra kept in memory.
const ROW_CELLS_CAP: usize = 1 << 24;

/// The dual search. Write candidate generators `g_1..g_s ∈ A^n` as the
/// columns of an `n × s` matrix with rows `r_1..r_n ∈ A^s`. The subuniverse
/// they generate is `{(t(r_1),…,t(r_n))}` over `s`-ary terms `t`, the
/// projection of the `s`-generated free algebra `F ≤ A^(A^s)` onto the
/// coordinates `r_1..r_n`. So `A^n` is `s`-generated iff some `n` points
/// project `F` onto all of `A^n`, and every subset of such points projects
/// onto the matching smaller power. That condition is checked on each
/// prefix of a sorted choice of points. Permuting generators permutes the
/// coordinates of points, so the first point is a sorted tuple and no later
/// point sorts below it.
///
/// `None` when `F` is too large to hold or the node cap runs out first.
fn row_search(prep: &Arc<Prepared>, n: usize, s: usize, budget: &ClosureBudget) -> Option<SizeSearch> {
    let size = prep.algebra().size();
    let points = checked_pow(size, s).filter(|&p| p <= ROW_POINTS_CAP)?;
    let codec = TupleCodec::new(size, s);
    let projections: Vec<Vec<Elem>> = (0..s)
        .map(|j| (0..points).map(|p| codec.decode(p)[j]).collect())
        .collect();
    let cap = ClosureBudget {
        max_elements: budget.max_elements.min(ROW_CELLS_CAP / points),
        ..*budget
    };
    let (free, complete) = close_vectors(prep, points, &projections, &cap);
    if !complete {
        return if budget.expired() { Some(SizeSearch::Unknown) } else { None };
    }
    if (free.len() as u128) < (size as u128).pow(n as u32) {
        return Some(SizeSearch::None);
    }
    let canon: Vec<usize> = (0..points)
        .map(|p| {
            let mut t = codec.decode(p);
            t.sort_unstable();
            codec.encode(&t)
        })
        .collect();
    let firsts: Vec<usize> = (0..points).filter(|&p| canon[p] == p).collect();
    let node_cap = (budget.max_elements / firsts.len().max(1)).max(1);
    let exhausted = AtomicBool::new(false);

    struct Rows<'a> {
        free: &'a [Vec<Elem>],
        canon: &'a [usize],
        size: usize,
        n: usize,
        points: usize,
        nodes: usize,
        node_cap: usize,
        budget: &'a ClosureBudget,
        exhausted: bool,
    }

    impl Rows<'_> {
        /// Adds point `p` to a choice with projection classes `classes`,
        /// returning the refined classes when the projection is still full.
        fn refine(&self, classes: &[u32], m: usize, p: usize) -> Option<Vec<u32>> {
            let full = self.size.pow(m as u32 + 1);
            let mut seen = vec![false; full];
            let mut hits = 0;
            let next: Vec<u32> = classes
                .iter()
                .zip(self.free)
                .map(|(&c, f)| {
                    let id = c as usize * self.size + f[p] as usize;
                    if !seen[id] {
                        seen[id] = true;
                        hits += 1;
                    }
                    id as u32
                })
                .collect();
            (hits == full).then_some(next)
        }

        fn extend(&mut self, chosen: &mut Vec<usize>, classes: &[u32]) -> Option<Vec<usize>> {
            let m = chosen.len();
            if m == self.n {
                return Some(chosen.clone());
            }
            for p in chosen[m - 1] + 1..self.points {
                if self.points - p < self.n - m {
                    return None;
                }
                if self.nodes >= self.node_cap || self.budget.expired() {
                    self.exhausted = true;
                    return None;
                }
                if self.canon[p] < chosen[0] {
                    continue;
                }
                self.nodes += 1;
                if let Some(next) = self.refine(classes, m, p) {
                    chosen.push(p);
                    if let Some(found) = self.extend(chosen, &next) {
                        return Some(found);
                    }
                    chosen.pop();
                }
            }
            None
        }
    }

    let found = firsts.par_iter().find_map_first(|&first| {
        let mut rows = Rows {
            free: &free,
            canon: &canon,
            size,
            n,
            points,
            nodes: 0,
            node_cap,
            budget,
            exhausted: false,
        };
        let zero = vec![0u32; free.len()];
        let result = rows.refine(&zero, 0, first).and_then(|classes| rows.extend(&mut vec![first], &classes));
        if rows.exhausted {
            exhausted.store(true, Ordering::Relaxed);
        }
        result
    });
    Some(match found {
        Some(chosen) => {
            // generator j is column j of the matrix with rows `chosen`
            let rows: Vec<Vec<Elem>> = chosen.iter().map(|&p| codec.decode(p)).collect();
            let gens = (0..s).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
            SizeSearch::FoundVectors(gens)
        }
        None if exhausted.load(Ordering::Relaxed) => {
            if !budget.expired() {
                return None;
            }
            SizeSearch::Unknown
        }
        None => SizeSearch::None,
    })
}

pub fn minimum_generating_size(alg: &FiniteAlgebra, n: usize, budget: &ClosureBudget) -> Result<GrowthEntry> {
    minimum_generating_size_from(alg, n, 0, budget)
}

/// Elements of `A^n` that no single operation step produces from the other
/// elements, so every generating set contains them.
///
/// `x = f(a_1,…,a_r)` with every `a_j ≠ x` holds iff for each coordinate `i`
/// some `t ∈ f⁻¹(x_i) ⊆ A^r` can be picked so that every position `j` differs
/// from `x` in at least one coordinate. That is a union of per-coordinate
/// masks over positions, tracked as a set of reachable masks.
fn required_elements(alg: &FiniteAlgebra, codec: &TupleCodec, total: usize) -> Vec<usize> {
    const MAX_ARITY: usize = 6;
    let size = alg.size();
    // per operation and value v: the masks {j : t_j ≠ v} over t with f(t) = v
    let masks: Vec<(usize, Vec<u64>)> = alg
        .operations()
        .iter()
        .filter(|op| op.arity() <= MAX_ARITY)
        .map(|op| {
            let r = op.arity();
            let mut by_value = vec![0u64; size];
            let args = TupleCodec::new(size, r);
            let mut t = vec![0; r];
            for k in 0..args.len().expect("small arity") {
                args.decode_into(k, &mut t);
                let v = op.apply(&t, size);
                let mask = t.iter().enumerate().filter(|&(_, &a)| a != v).fold(0, |m, (j, _)| m | 1 << j);
                by_value[v as usize] |= 1 << mask;
            }
            (r, by_value)
        })
        .collect();
    let produced = |x: &[Elem]| {
        masks.iter().any(|(r, by_value)| {
            let mut reach: u64 = 1;
            for &xi in x {
                let here = by_value[xi as usize];
                let mut next = 0u64;
                for a in (0..1usize << r).filter(|a| reach >> a & 1 == 1) {
                    for b in (0..1usize << r).filter(|b| here >> b & 1 == 1) {
                        next |= 1 << (a | b);
                    }
                }
                reach = next;
                if reach == 0 {
                    return false;
                }
            }
            reach >> ((1usize << r) - 1) & 1 == 1
        })
    };
    let mut x = vec![0; codec.width()];
    (0..total)
        .filter(|&k| {
            codec.decode_into(k, &mut x);
            !produced(&x)
        })
        .collect()
}

/// As [`minimum_generating_size`], starting the search at a lower bound
/// known from elsewhere.
pub fn minimum_generating_size_from(
    alg: &FiniteAlgebra,
    n: usize,
    known_lower: usize,
    budget: &ClosureBudget,
) -> Result<GrowthEntry> {
    let total = power_size(alg, n, Limits::default().universe_cap)?;
    let codec = TupleCodec::new(alg.size(), n);
    let prep = Prepared::new(alg);
    let canon = (0..total)
        .map(|x| {
            let mut t = codec.decode(x);
            t.sort_unstable();
            codec.encode(&t)
        })
        .collect();
    let search = Search {
        codec,
        total,
        budget,
        canon,
    };
    let mut notes = Vec::new();
    let mut base = Subpower::new(prep.clone(), n, false);
    let log = log_lower_bound(alg.size(), n);
    let lower = log.max(known_lower).max(1);
    let unfinished = |note: &str| GrowthEntry {
        n,
        value: DValue::Interval { lower, upper: total },
        witness: Vec::new(),
        notes: vec![format!("budget exhausted {note}")],
    };
    if base.close(budget, &search.stop()) == CloseOutcome::Exhausted {
        return Ok(unfinished("closing the constants"));
    }
    if base.len() == total {
        return Ok(GrowthEntry {
            n,
            value: DValue::Exact(0),
            witness: Vec::new(),
            notes: vec!["generated by the constants".into()],
        });
    }
    let required = required_elements(alg, &search.codec, total);
    let lower = lower.max(required.len());
    if !required.is_empty() {
        notes.push(format!("{} elements lie in every generating set", required.len()));
        for &x in &required {
            base.add_generator(&search.codec.decode(x), 0);
        }
        if base.close(budget, &search.stop()) == CloseOutcome::Exhausted {
            return Ok(unfinished("closing the required elements"));
        }
    }
    // greedy upper bound
    let mut greedy = required.clone();
    let mut sp = base.clone();
    for x in 0..total {
        if sp.len() == total {
            break;
        }
        let v = search.codec.decode(x);
        if sp.position(&v).is_none() {
            sp.add_generator(&v, 0);
            if sp.close(budget, &search.stop()) == CloseOutcome::Exhausted {
                return Ok(unfinished("during the greedy pass"));
            }
            greedy.push(x);
        }
    }
    let decode = |set: &[usize]| -> Vec<Vec<Elem>> { set.iter().map(|&x| search.codec.decode(x)).collect() };
    let upper = greedy.len();
    if known_lower > log {
        notes.push(format!("lower bound {known_lower} carried in"));
    }
    for s in lower..upper {
        let by_rows = row_search(&prep, n, s, budget);
        if by_rows.is_some() && !notes.iter().any(|n| n == ROW_NOTE) {
            notes.push(ROW_NOTE.to_string());
        }
        match by_rows.unwrap_or_else(|| search_size(&search, &base, s - required.len())) {
            SizeSearch::Found(w) => {
                let mut w = w;
                w.extend(&required);
                return Ok(GrowthEntry {
                    n,
                    value: DValue::Exact(s),
                    witness: decode(&w),
                    notes,
                });
            }
            SizeSearch::FoundVectors(witness) => {
                return Ok(GrowthEntry {
                    n,
                    value: DValue::Exact(s),
                    witness,
                    notes,
                });
            }
            SizeSearch::None => {}
            SizeSearch::Unknown => {
                notes.push(format!("budget exhausted while searching size {s}"));
                return Ok(GrowthEntry {
                    n,
                    value: DValue::Interval { lower: s, upper },
                    witness: decode(&greedy),
                    notes,
                });
            }
        }
    }
    if lower > upper {
        return Err(Error::Precondition(format!(
            "lower bound {lower} exceeds a generating set of size {upper}"
        )));
    }
    Ok(GrowthEntry {
        n,
        value: DValue::Exact(upper),
        witness: decode(&greedy),
        notes,
    })
}

/// Recomputes the closure of `generators` from scratch.
pub fn verify_generating_set(alg: &FiniteAlgebra, n: usize, generators: &[Vec<Elem>]) -> Result<bool> {
    let total = power_size(alg, n, Limits::default().universe_cap)?;
    let (closure, complete) = close_vectors(&Prepared::new(alg), n, generators, &ClosureBudget::default());
    Ok(complete && closure.len() == total)
}

/// `d_A(n)` for `n = 1..=n_max`, skipping powers above `cap` elements.
/// Each value seeds the search for the next with `d(n) ≥ d(n−1)`; quotients
/// by coatoms of `lattice`, when given, contribute `d(n) ≥ d_{A/θ}(n)`.
pub fn growth_table(
    alg: &FiniteAlgebra,
    n_max: usize,
    cap: usize,
    lattice: Option<&CongruenceLattice>,
    budget: &ClosureBudget,
) -> Result<GrowthReport> {
    let quotients: Vec<FiniteAlgebra> = match lattice {
        Some(l) => l
            .coatoms()
            .into_iter()
            .filter(|&c| c != l.bottom())
            .map(|c| alg.quotient(&l.congruences()[c]).map(|(q, _)| q))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let mut entries: Vec<GrowthEntry> = Vec::new();
    for n in 1..=n_max {
        if power_size(alg, n, cap).is_err() {
            break;
        }
        let mut lower = entries.last().map_or(0, |e| e.value.lower());
        let mut notes = Vec::new();
        for q in &quotients {
            if let Ok(e) = minimum_generating_size(q, n, budget) {
                if e.value.lower() > lower {
                    lower = e.value.lower();
                    notes.push(format!("quotient of size {} gives lower bound {lower}", q.size()));
                }
            }
        }
        let mut entry = minimum_generating_size_from(alg, n, lower, budget)?;
        entry.notes.extend(notes);
        entries.push(entry);
    }
    Ok(GrowthReport {
        algebra: alg.name().to_string(),
        size: alg.size(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearConstantCheck {
    pub n: usize,
    pub generates: bool,
    pub set_size: usize,
    pub closure_size: usize,
    pub power_size: usize,
}

/// Tuples of `A^n` that are constant except possibly in one coordinate.
pub fn near_constant_set(size: usize, n: usize) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    for c in 0..size as Elem {
        out.push(vec![c; n]);
    }
    for pos in 0..n {
        for c in 0..size as Elem {
            for d in 0..size as Elem {
                if d != c {
                    let mut t = vec![c; n];
                    t[pos] = d;
                    out.push(t);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// `|A| + n|A|(|A|−1)`, the size of the near-constant set for `n ≥ 3`.
pub fn near_constant_count(size: usize, n: usize) -> usize {
    size + n * size * size.saturating_sub(1)
}

pub fn near_constant_generation_check(alg: &FiniteAlgebra, n: usize, budget: &ClosureBudget) -> Result<NearConstantCheck> {
    let total = power_size(alg, n, Limits::default().universe_cap)?;
    let g = near_constant_set(alg.size(), n);
    if n >= 3 && g.len() != near_constant_count(alg.size(), n) {
        return Err(Error::Precondition(format!(
            "near-constant set has {} elements, expected {}",
            g.len(),
            near_constant_count(alg.size(), n)
        )));
    }
    let prep = Prepared::new(alg);
    let mut sp = Subpower::new(prep, n, false);
    for t in &g {
        sp.add_generator(t, 0);
    }
    let stop = StopWhen {
        target: None,
        count: Some(total),
    };
    if sp.close(budget, &stop) == CloseOutcome::Exhausted {
        return Err(Error::Precondition("budget exhausted closing the near-constant set".into()));
    }
    Ok(NearConstantCheck {
        n,
        generates: sp.len() == total,
        set_size: g.len(),
        closure_size: sp.len(),
        power_size: total,
    })
}

#[derive(Debug, Clone)]
pub struct AuditCheck {
    pub name: String,
    /// `None` when the values needed were not all determined.
    pub holds: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct IdentityAudit {
    pub checks: Vec<AuditCheck>,
}

impl IdentityAudit {
    pub fn violations(&self) -> Vec<&AuditCheck> {
        self.checks.iter().filter(|c| c.holds == Some(false)).collect()
    }

    pub fn skipped(&self) -> usize {
        self.checks.iter().filter(|c| c.holds.is_none()).count()
    }

    fn push(&mut self, name: String, holds: Option<bool>, detail: String) {
        self.checks.push(AuditCheck { name, holds, detail });
    }
}

/// Decides `x ≤ y` from interval values when possible.
fn at_most(x: DValue, y: DValue) -> Option<bool> {
    if x.upper() <= y.lower() {
        Some(true)
    } else if x.lower() > y.upper() {
        Some(false)
    } else {
        None
    }
}

/// The induced algebra on a neighborhood, with its binary polynomials as
/// basic operations. It has fewer operations than the full induced algebra,
/// so its `d` values bound the true ones from above.
fn induced_binary_algebra(alg: &FiniteAlgebra, e: &crate::clone::WitnessedOperation, budget: &ClosureBudget) -> Result<FiniteAlgebra> {
    let induced = induced_polynomials(alg, e, 2, budget)?;
    let u = &induced.universe;
    let local = |x: Elem| u.binary_search(&x).expect("values lie in the neighborhood") as Elem;
    let ops = induced
        .operations
        .operations
        .iter()
        .enumerate()
        .map(|(i, op)| Operation::new(format!("p{i}"), 2, op.table.iter().map(|&x| local(x)).collect()))
        .collect();
    FiniteAlgebra::new(format!("{}|{:?}", alg.name(), u), u.len(), ops)
}

/// Checks the identities relating `d` across powers, quotients, constant
/// expansion and spreads over neighborhoods, within the given ranges. Powers
/// above `cap` elements are skipped.
pub fn growth_identities_audit(
    alg: &FiniteAlgebra,
    k_max: usize,
    n_max: usize,
    cap: usize,
    budget: &ClosureBudget,
) -> Result<IdentityAudit> {
    let mut audit = IdentityAudit::default();
    let fits = |a: &FiniteAlgebra, n: usize| power_size(a, n, cap).is_ok();
    let mut d_cache: Vec<Option<DValue>> = Vec::new();
    let mut d = |n: usize| -> Result<Option<DValue>> {
        while d_cache.len() <= n {
            let m = d_cache.len();
            d_cache.push(if m > 0 && fits(alg, m) {
                Some(minimum_generating_size(alg, m, budget)?.value)
            } else {
                None
            });
        }
        Ok(d_cache[n])
    };

    for n in 1..=n_max.max(k_max * n_max) {
        if let Some(DValue::Exact(v)) = d(n)? {
            audit.push(
                format!("bounds n={n}"),
                Some(within_general_bounds(alg.size(), n, v)),
                format!("d({n}) = {v}"),
            );
        }
    }

    for k in 2..=k_max {
        if !fits(alg, k) {
            continue;
        }
        let power = alg.direct_power(k, &Limits::default())?;
        for n in 1..=n_max {
            let name = format!("power k={k} n={n}");
            if !fits(&power, n) {
                continue;
            }
            let (Some(lhs), Some(rhs)) = (Some(minimum_generating_size(&power, n, budget)?.value), d(k * n)?) else {
                audit.push(name, None, "power too large".into());
                continue;
            };
            let holds = match (lhs, rhs) {
                (DValue::Exact(a), DValue::Exact(b)) => Some(a == b),
                _ if lhs.upper() < rhs.lower() || rhs.upper() < lhs.lower() => Some(false),
                _ => None,
            };
            audit.push(name, holds, format!("d_(A^{k})({n}) = {lhs}, d_A({}) = {rhs}", k * n));
        }
    }

    let lattice = congruence_lattice(alg, 1 << 10)?;
    for (i, theta) in lattice.congruences().iter().enumerate() {
        if theta.is_identity() {
            continue;
        }
        let (q, _) = alg.quotient(theta)?;
        for n in 1..=n_max {
            let Some(da) = d(n)? else { continue };
            let dq = minimum_generating_size(&q, n, budget)?.value;
            audit.push(
                format!("quotient #{i} n={n}"),
                at_most(dq, da),
                format!("d_(A/{theta})({n}) = {dq}, d_A({n}) = {da}"),
            );
        }
    }

    let expanded = alg.constant_expansion();
    if let Some(d1) = d(1)? {
        for n in 1..=n_max {
            let Some(da) = d(n)? else { continue };
            let db = minimum_generating_size(&expanded, n, budget)?.value;
            let low = match (da, d1) {
                (DValue::Exact(a), DValue::Exact(b)) => Some(DValue::Exact(a.saturating_sub(b))),
                _ => None,
            };
            let holds = match (low.map(|l| at_most(l, db)), at_most(db, da)) {
                (Some(Some(false)), _) | (_, Some(false)) => Some(false),
                (Some(Some(true)), Some(true)) => Some(true),
                _ => None,
            };
            audit.push(
                format!("constant expansion n={n}"),
                holds,
                format!("d_A({n}) = {da}, d_A(1) = {d1}, expanded {db}"),
            );
        }
    }

    let unary = unary_polynomial_clone(alg, budget)?;
    let hoods: Vec<_> = neighborhoods(&unary)
        .into_iter()
        .filter(|(u, _)| u.len() < alg.size())
        .collect();
    let family: Vec<Vec<Elem>> = hoods.iter().map(|(u, _)| u.clone()).collect();
    if !family.is_empty() {
        if let crate::budget::Search::Found(w) = spread_check(alg, &family, budget)? {
            let (_, leaves) = w.polynomial();
            let mut induced: Vec<Option<Arc<FiniteAlgebra>>> = vec![None; hoods.len()];
            for &l in &leaves {
                if induced[l].is_none() {
                    induced[l] = Some(Arc::new(induced_binary_algebra(alg, &hoods[l].1, budget)?));
                }
            }
            for n in 1..=n_max {
                let Some(da) = d(n)? else { continue };
                let mut sum = 0;
                let mut ok = true;
                for &l in &leaves {
                    let u = induced[l].as_ref().expect("built above");
                    if !fits(u, n) {
                        ok = false;
                        break;
                    }
                    sum += minimum_generating_size(u, n, budget)?.value.upper();
                }
                if !ok {
                    continue;
                }
                let holds = if da.lower() > sum { Some(false) } else { Some(da.upper() <= sum).filter(|&b| b) };
                audit.push(
                    format!("spread over neighborhoods n={n}"),
                    holds,
                    format!("d_A({n}) = {da}, sum over {} leaves at most {sum}", leaves.len()),
                );
            }
        }
    }
    Ok(audit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    Linear,
    Exponential,
    Unknown,
}

impl GrowthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthClass::Linear => "linear",
            GrowthClass::Exponential => "exponential",
            GrowthClass::Unknown => "unknown",
        }
    }
}

/// Least-squares fits of `d(n) ≈ a·n + b` and `d(n) ≈ 2^(c·n + e)` over the
/// exact values. Purely descriptive.
#[derive(Debug, Clone)]
pub struct GrowthFit {
    pub points: Vec<(usize, usize)>,
    pub slope: f64,
    pub intercept: f64,
    pub linear_residual: f64,
    pub rate: f64,
    pub offset: f64,
    pub exponential_residual: f64,
    pub class: GrowthClass,
}

/// Points needed before a class is reported.
pub const MIN_FIT_POINTS: usize = 3;

/// A class is reported only when its residual is at most this fraction of
/// the other one; closer fits give `Unknown`.
pub const DECISIVE_RATIO: f64 = 0.5;

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

pub fn fit_growth(report: &GrowthReport) -> GrowthFit {
    let points = report.exact_points();
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v as f64).collect();
    if points.len() < 2 {
        return GrowthFit {
            points,
            slope: 0.0,
            intercept: 0.0,
            linear_residual: 0.0,
            rate: 0.0,
            offset: 0.0,
            exponential_residual: 0.0,
            class: GrowthClass::Unknown,
        };
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let linear_residual: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let logs: Vec<f64> = ys.iter().map(|y| y.max(1.0).log2()).collect();
    let (rate, offset) = least_squares(&xs, &logs);
    let exponential_residual: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (rate * x + offset).exp2()).powi(2))
        .sum();
    let class = if points.len() < MIN_FIT_POINTS {
        GrowthClass::Unknown
    } else if rate <= 0.0 || linear_residual <= DECISIVE_RATIO * exponential_residual + 1e-9 {
        GrowthClass::Linear
    } else if exponential_residual <= DECISIVE_RATIO * linear_residual {
        GrowthClass::Exponential
    } else {
        GrowthClass::Unknown
    };
    GrowthFit {
        points,
        slope,
        intercept,
        linear_residual,
        rate,
        offset,
        exponential_residual,
        class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use itertools::Itertools;
    use std::collections::BTreeSet;

    /// Smallest generating set of `A^n` by trying every subset in order of
    /// size, with a naive closure.
    fn brute_d(alg: &FiniteAlgebra, n: usize) -> usize {
        let codec = TupleCodec::new(alg.size(), n);
        let total = codec.len().unwrap();
        let close = |gens: &[usize]| -> usize {
            let mut set: BTreeSet<Vec<Elem>> = gens.iter().map(|&g| codec.decode(g)).collect();
            for op in alg.operations() {
                if op.arity() == 0 {
                    set.insert(vec![op.table()[0]; n]);
                }
            }
            loop {
                let cur: Vec<Vec<Elem>> = set.iter().cloned().collect();
                let before = set.len();
                for op in alg.operations() {
                    let k = op.arity();
                    if k == 0 || cur.is_empty() {
                        continue;
                    }
                    let c = TupleCodec::new(cur.len(), k);
                    for t in 0..c.len().unwrap() {
                        let idx = c.decode(t);
                        let v: Vec<Elem> = (0..n)
                            .map(|l| {
                                let args: Vec<Elem> = idx.iter().map(|&i| cur[i as usize][l]).collect();
                                op.apply(&args, alg.size())
                            })
                            .collect();
                        set.insert(v);
                    }
                }
                if set.len() == before {
                    return set.len();
                }
            }
        };
        (0..=total)
            .find(|&s| (0..total).combinations(s).any(|c| close(&c) == total))
            .expect("the whole power generates")
    }

    #[test]
    fn z2_values() {
        let z2 = catalog::z2_group();
        for n in 1..=4 {
            let e = minimum_generating_size(&z2, n, &ClosureBudget::default()).unwrap();
            assert_eq!(e.value, DValue::Exact(n));
            assert!(verify_generating_set(&z2, n, &e.witness).unwrap());
        }
    }

    #[test]
    fn bare_set_doubles() {
        let bare = catalog::two_element_bare_set();
        for n in 1..=4 {
            let e = minimum_generating_size(&bare, n, &ClosureBudget::default()).unwrap();
            assert_eq!(e.value, DValue::Exact(1 << n));
        }
    }

    #[test]
    fn matches_brute_force() {
        for alg in [
            catalog::z3_group(),
            catalog::two_element_lattice(),
            catalog::two_element_boolean(),
            catalog::example_b(),
        ] {
            for n in 1..=2 {
                let e = minimum_generating_size(&alg, n, &ClosureBudget::default()).unwrap();
                assert_eq!(e.value, DValue::Exact(brute_d(&alg, n)), "{} n={n}", alg.name());
                assert!(verify_generating_set(&alg, n, &e.witness).unwrap());
            }
        }
    }

    #[test]
    fn required_elements_match_definition() {
        for alg in [
            catalog::two_element_bare_set(),
            catalog::two_element_lattice(),
            catalog::two_element_boolean(),
            catalog::z3_group(),
            catalog::example_b(),
        ] {
            for n in 1..=2 {
                let power = alg.direct_power(n, &Limits::default()).unwrap();
                let total = power.size();
                let expected: Vec<usize> = (0..total)
                    .filter(|&x| {
                        let rest: Vec<Elem> = (0..total as Elem).filter(|&y| y as usize != x).collect();
                        !power.generate_subuniverse(&rest).unwrap().contains(&(x as Elem))
                    })
                    .collect();
                let codec = TupleCodec::new(alg.size(), n);
                assert_eq!(required_elements(&alg, &codec, total), expected, "{} n={n}", alg.name());
            }
        }
    }

    #[test]
    fn tiny_budget_gives_interval() {
        let alg = catalog::example_bxc();
        let e = minimum_generating_size(&alg, 2, &ClosureBudget::new(300, 10_000)).unwrap();
        let DValue::Interval { lower, upper } = e.value else {
            panic!("expected an interval, got {}", e.value)
        };
        assert!(lower <= upper);
        assert!(verify_generating_set(&alg, 2, &e.witness).unwrap());
    }

    #[test]
    fn log_bound() {
        assert_eq!(log_lower_bound(2, 1), 0);
        assert_eq!(log_lower_bound(2, 2), 1);
        assert_eq!(log_lower_bound(2, 5), 3);
        assert_eq!(log_lower_bound(4, 16), 2);
        assert_eq!(log_lower_bound(4, 17), 3);
        assert!(within_general_bounds(2, 3, 3));
        assert!(!within_general_bounds(2, 2, 5));
    }

    #[test]
    fn near_constant_sets() {
        assert_eq!(near_constant_set(4, 3).len(), 40);
        assert_eq!(near_constant_count(4, 3), 40);
        let z4 = catalog::z4_group();
        for n in 2..=3 {
            assert!(near_constant_generation_check(&z4, n, &ClosureBudget::default()).unwrap().generates);
        }
        let bare = catalog::two_element_bare_set();
        let r = near_constant_generation_check(&bare, 3, &ClosureBudget::default()).unwrap();
        assert!(r.generates);
        assert_eq!(r.set_size, 8);
        let r = near_constant_generation_check(&bare, 4, &ClosureBudget::default()).unwrap();
        assert!(!r.generates);
        assert_eq!((r.set_size, r.closure_size), (10, 10));
    }

    #[test]
    fn audit_on_z2() {
        let audit = growth_identities_audit(&catalog::z2_group(), 2, 2, GROWTH_UNIVERSE_CAP, &ClosureBudget::default()).unwrap();
        assert!(audit.violations().is_empty(), "{:?}", audit.violations());
        assert!(audit.checks.iter().any(|c| c.name == "power k=2 n=1" && c.holds == Some(true)));
        assert!(audit.checks.iter().any(|c| c.name == "constant expansion n=2" && c.holds == Some(true)));
    }

    #[test]
    fn fits() {
        let mk = |vals: &[usize]| GrowthReport {
            algebra: "t".into(),
            size: 2,
            entries: vals
                .iter()
                .enumerate()
                .map(|(i, &v)| GrowthEntry {
                    n: i + 1,
                    value: DValue::Exact(v),
                    witness: vec![],
                    notes: vec![],
                })
                .collect(),
        };
        assert_eq!(fit_growth(&mk(&[1, 2, 3, 4])).class, GrowthClass::Linear);
        assert_eq!(fit_growth(&mk(&[2, 4, 8, 16])).class, GrowthClass::Exponential);
        assert_eq!(fit_growth(&mk(&[2, 4])).class, GrowthClass::Unknown);
        assert_eq!(fit_growth(&mk(&[1, 1, 2])).class, GrowthClass::Unknown);
        assert_eq!(fit_growth(&mk(&[3, 3, 3])).class, GrowthClass::Linear);
    }
}
