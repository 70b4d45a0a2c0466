//! Pointed cube polynomials.
//!
//! A template is a `k × m` matrix whose entries are the variable `x`, further
//! variables, or constant symbols. An `m`-ary polynomial `F` satisfies it if
//! `F(row) = x` for every row and every assignment of the variables, for some
//! fixed values of the constant symbols. Each column must contain an entry other
//! than `x`.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;

use crate::algebra::{FiniteAlgebra, TupleCodec};
use crate::budget::{ClosureBudget, Search};
use crate::clone::{interpolate_with, Interpolant, PartialDomain};
use crate::closure::Prepared;
use crate::error::{Error, Result};
use crate::Elem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    X,
    /// Another variable, `y{index}`.
    Var(usize),
    /// A constant symbol.
    Const(usize),
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::X => write!(f, "x"),
            Entry::Var(i) => write!(f, "y{i}"),
            Entry::Const(i) => write!(f, "c{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeTemplate {
    rows: Vec<Vec<Entry>>,
    constants: usize,
    variables: usize,
}

pub const MAX_ROWS: usize = 8;
pub const MAX_COLUMNS: usize = 8;
pub const MAX_CONSTANTS: usize = 4;

impl CubeTemplate {
    pub fn new(rows: Vec<Vec<Entry>>) -> Result<Self> {
        let k = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if k == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Precondition("template must be a nonempty rectangular matrix".into()));
        }
        if k > MAX_ROWS || m > MAX_COLUMNS {
            return Err(Error::Precondition(format!(
                "template larger than {MAX_ROWS} rows or {MAX_COLUMNS} columns"
            )));
        }
        for j in 0..m {
            if rows.iter().all(|r| r[j] == Entry::X) {
                return Err(Error::Precondition(format!("column {j} contains only x")));
            }
        }
        let mut constants = 0;
        let mut variables = 0;
        for e in rows.iter().flatten() {
            match *e {
                Entry::Const(i) => constants = constants.max(i + 1),
                Entry::Var(i) => variables = variables.max(i + 1),
                Entry::X => {}
            }
        }
        if constants > MAX_CONSTANTS {
            return Err(Error::Precondition(format!("more than {MAX_CONSTANTS} constant symbols")));
        }
        Ok(CubeTemplate {
            rows,
            constants,
            variables,
        })
    }

    /// Parses rows separated by `/` with entries separated by spaces or commas,
    /// e.g. `"x c0 c0 / c0 c0 x"`. Entries are `x`, `y`/`y{i}` or `c{i}`.
    pub fn parse(text: &str) -> Result<Self> {
        let rows = text
            .split('/')
            .map(|row| {
                row.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(parse_entry)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    /// The Maltsev identities `F(x,y,y) = x = F(y,y,x)`.
    pub fn maltsev() -> Self {
        use Entry::*;
        Self::new(vec![vec![X, Var(0), Var(0)], vec![Var(0), Var(0), X]]).expect("valid")
    }

    pub fn rows(&self) -> &[Vec<Entry>] {
        &self.rows
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn constants(&self) -> usize {
        self.constants
    }

    /// The interpolation constraints for fixed constant values, or `None` if
    /// two rows demand different values at the same point.
    pub fn domain(&self, size: usize, constant_values: &[Elem]) -> Result<Option<PartialDomain>> {
        let env_codec = TupleCodec::new(size, 1 + self.variables);
        let n = env_codec.len().ok_or_else(|| Error::Precondition("too many template variables".into()))?;
        let mut constraints = Vec::with_capacity(self.rows.len() * n);
        let mut env = vec![0; 1 + self.variables];
        for row in &self.rows {
            for i in 0..n {
                env_codec.decode_into(i, &mut env);
                let point = row
                    .iter()
                    .map(|e| match *e {
                        Entry::X => env[0],
                        Entry::Var(j) => env[1 + j],
                        Entry::Const(j) => constant_values[j],
                    })
                    .collect();
                constraints.push((point, env[0]));
            }
        }
        PartialDomain::from_constraints(self.width(), constraints)
    }
}

fn parse_entry(s: &str) -> Result<Entry> {
    let bad = || Error::Document(format!("bad template entry `{s}`"));
    match s {
        "x" => Ok(Entry::X),
        "y" => Ok(Entry::Var(0)),
        "c" => Ok(Entry::Const(0)),
        _ if s.starts_with('y') => s[1..].parse().map(Entry::Var).map_err(|_| bad()),
        _ if s.starts_with('c') => s[1..].parse().map(Entry::Const).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

impl fmt::Display for CubeTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.rows.iter().map(|r| r.iter().join(" ")).collect();
        write!(f, "{}", rows.join(" / "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeWitness {
    pub template: CubeTemplate,
    pub constant_values: Vec<Elem>,
    pub polynomial: Interpolant,
}

impl CubeWitness {
    /// Re-checks every identity of the template by evaluation.
    pub fn verify(&self, alg: &FiniteAlgebra) -> Result<bool> {
        let Some(d) = self.template.domain(alg.size(), &self.constant_values)? else {
            return Ok(false);
        };
        let values = self.polynomial.witness.eval_points(alg, d.points())?;
        Ok(Some(values.as_slice()) == d.targets())
    }
}

pub fn pointed_cube_search(alg: &FiniteAlgebra, template: &CubeTemplate, budget: &ClosureBudget) -> Result<Search<CubeWitness>> {
    let prep = Prepared::new(alg);
    search_with(&prep, template, budget)
}

fn search_with(prep: &std::sync::Arc<Prepared>, template: &CubeTemplate, budget: &ClosureBudget) -> Result<Search<CubeWitness>> {
    let alg = prep.algebra();
    let codec = TupleCodec::new(alg.size(), template.constants());
    let n = codec.len().ok_or_else(|| Error::Precondition("too many constant assignments".into()))?;
    let mut unknown = false;
    let mut values = vec![0; template.constants()];
    for i in 0..n {
        if budget.expired() {
            return Ok(Search::Unknown);
        }
        codec.decode_into(i, &mut values);
        let Some(domain) = template.domain(alg.size(), &values)? else {
            continue;
        };
        match interpolate_with(prep, &domain, true, budget)? {
            Search::Found(polynomial) => {
                return Ok(Search::Found(CubeWitness {
                    template: template.clone(),
                    constant_values: values,
                    polynomial,
                }))
            }
            Search::Unknown => unknown = true,
            Search::NotFound => {}
        }
    }
    Ok(if unknown { Search::Unknown } else { Search::NotFound })
}

/// Templates over `x` and constant symbols with `2 ≤ k ≤ max_rows` rows and
/// `1 ≤ p ≤ max_constants` symbols, each using all of its symbols and as many
/// distinct columns as allowed (at most `max_columns`).
///
/// Adding columns and dropping repeated ones never makes a template harder, so
/// these cover every template within the bounds. Templates equal up to row
/// order and renaming of symbols are listed once.
pub fn template_battery(max_rows: usize, max_constants: usize, max_columns: usize) -> Vec<CubeTemplate> {
    let mut out = Vec::new();
    for k in 2..=max_rows {
        for p in 1..=max_constants {
            let mut alphabet = vec![Entry::X];
            alphabet.extend((0..p).map(Entry::Const));
            let columns: Vec<Vec<Entry>> = (0..k)
                .map(|_| alphabet.iter().copied())
                .multi_cartesian_product()
                .filter(|c| c.iter().any(|e| *e != Entry::X))
                .collect();
            let m = columns.len().min(max_columns);
            let mut seen = BTreeSet::new();
            for choice in columns.iter().combinations(m) {
                let used: BTreeSet<usize> = choice
                    .iter()
                    .flat_map(|c| c.iter())
                    .filter_map(|e| match e {
                        Entry::Const(i) => Some(*i),
                        _ => None,
                    })
                    .collect();
                if used.len() != p {
                    continue;
                }
                let canon = canonical(&choice, k, p);
                if seen.insert(canon.clone()) {
                    let rows = (0..k).map(|r| canon.iter().map(|c| c[r]).collect()).collect();
                    out.push(CubeTemplate::new(rows).expect("battery templates are valid"));
                }
            }
        }
    }
    out
}

fn canonical(columns: &[&Vec<Entry>], k: usize, p: usize) -> Vec<Vec<Entry>> {
    let mut best: Option<Vec<Vec<Entry>>> = None;
    for rows in (0..k).permutations(k) {
        for syms in (0..p).permutations(p) {
            let mut cols: Vec<Vec<Entry>> = columns
                .iter()
                .map(|c| {
                    rows.iter()
                        .map(|&r| match c[r] {
                            Entry::Const(i) => Entry::Const(syms[i]),
                            e => e,
                        })
                        .collect()
                })
                .collect();
            cols.sort();
            if best.as_ref().is_none_or(|b| cols < *b) {
                best = Some(cols);
            }
        }
    }
    best.expect("at least one permutation")
}

/// Result of running a list of templates.
#[derive(Debug, Clone)]
pub struct BatteryOutcome {
    pub result: Search<CubeWitness>,
    pub templates_tried: usize,
    pub templates_unknown: usize,
}

/// Runs templates in order until one succeeds; the budget's deadline bounds
/// the whole run.
pub fn run_battery(alg: &FiniteAlgebra, templates: &[CubeTemplate], budget: &ClosureBudget) -> Result<BatteryOutcome> {
    let prep = Prepared::new(alg);
    let mut tried = 0;
    let mut unknown = 0;
    for t in templates {
        if budget.expired() {
            unknown += templates.len() - tried;
            break;
        }
        tried += 1;
        match search_with(&prep, t, budget)? {
            Search::Found(w) => {
                return Ok(BatteryOutcome {
                    result: Search::Found(w),
                    templates_tried: tried,
                    templates_unknown: unknown,
                })
            }
            Search::Unknown => unknown += 1,
            Search::NotFound => {}
        }
    }
    Ok(BatteryOutcome {
        result: if unknown > 0 { Search::Unknown } else { Search::NotFound },
        templates_tried: tried,
        templates_unknown: unknown,
    })
}
