//! Terms with constants over the signature of a [`FiniteAlgebra`].
//!
//! Subterms are reference counted, so derivations recorded by the closure
//! engine share structure instead of being copied. Evaluation of a whole
//! table memoizes shared nodes.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::algebra::{FiniteAlgebra, TupleCodec};
use crate::budget::Limits;
use crate::error::{Error, Result};
use crate::Elem;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// The variable `x{index}`.
    Var(usize),
    /// A fixed element of the universe.
    Const(Elem),
    /// An operation symbol applied to subterms.
    Apply { symbol: String, args: Vec<Arc<Term>> },
}

impl Term {
    pub fn var(i: usize) -> Arc<Term> {
        Arc::new(Term::Var(i))
    }

    pub fn constant(c: Elem) -> Arc<Term> {
        Arc::new(Term::Const(c))
    }

    pub fn apply(symbol: impl Into<String>, args: Vec<Arc<Term>>) -> Arc<Term> {
        Arc::new(Term::Apply {
            symbol: symbol.into(),
            args,
        })
    }

    /// Checks arities, symbols and constant ranges against `alg`.
    pub fn validate(&self, alg: &FiniteAlgebra) -> Result<()> {
        let mut seen = HashMap::new();
        self.validate_inner(alg, &mut seen)
    }

    fn validate_inner(&self, alg: &FiniteAlgebra, seen: &mut HashMap<*const Term, ()>) -> Result<()> {
        match self {
            Term::Var(_) => Ok(()),
            Term::Const(c) => alg.check_element(*c),
            Term::Apply { symbol, args } => {
                let op = alg
                    .operation(symbol)
                    .ok_or_else(|| Error::UnknownSymbol(symbol.clone()))?;
                if op.arity() != args.len() {
                    return Err(Error::ArityMismatch {
                        symbol: symbol.clone(),
                        arity: op.arity(),
                        given: args.len(),
                    });
                }
                for a in args {
                    if seen.insert(Arc::as_ptr(a), ()).is_none() {
                        a.validate_inner(alg, seen)?;
                    }
                }
                Ok(())
            }
        }
    }

    /// One more than the largest variable index, 0 for ground terms.
    pub fn variable_bound(&self) -> usize {
        let mut memo = HashMap::new();
        self.var_bound_inner(&mut memo)
    }

    fn var_bound_inner(&self, memo: &mut HashMap<*const Term, usize>) -> usize {
        match self {
            Term::Var(i) => i + 1,
            Term::Const(_) => 0,
            Term::Apply { args, .. } => args
                .iter()
                .map(|a| {
                    let key = Arc::as_ptr(a);
                    if let Some(&v) = memo.get(&key) {
                        v
                    } else {
                        let v = a.var_bound_inner(memo);
                        memo.insert(key, v);
                        v
                    }
                })
                .max()
                .unwrap_or(0),
        }
    }

    /// Evaluates bottom-up under a variable assignment.
    pub fn eval(&self, alg: &FiniteAlgebra, env: &[Elem]) -> Result<Elem> {
        let mut memo = HashMap::new();
        self.eval_inner(alg, env, &mut memo)
    }

    fn eval_inner(
        &self,
        alg: &FiniteAlgebra,
        env: &[Elem],
        memo: &mut HashMap<*const Term, Elem>,
    ) -> Result<Elem> {
        match self {
            Term::Var(i) => {
                let v = *env.get(*i).ok_or(Error::MissingVariable(*i))?;
                alg.check_element(v)?;
                Ok(v)
            }
            Term::Const(c) => {
                alg.check_element(*c)?;
                Ok(*c)
            }
            Term::Apply { symbol, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    let key = Arc::as_ptr(a);
                    let v = match memo.get(&key) {
                        Some(&v) => v,
                        None => {
                            let v = a.eval_inner(alg, env, memo)?;
                            memo.insert(key, v);
                            v
                        }
                    };
                    vals.push(v);
                }
                alg.apply(symbol, &vals)
            }
        }
    }

    /// The full table of the term as an `arity`-ary operation.
    pub fn table(&self, alg: &FiniteAlgebra, arity: usize, limits: &Limits) -> Result<Vec<Elem>> {
        if self.variable_bound() > arity {
            return Err(Error::MissingVariable(self.variable_bound() - 1));
        }
        let codec = TupleCodec::new(alg.size(), arity);
        let len = codec
            .len()
            .filter(|&l| l <= limits.table_cap)
            .ok_or_else(|| Error::CapExceeded {
                what: format!("{arity}-ary term table"),
                requested: (alg.size() as u128).saturating_pow(arity as u32),
                cap: limits.table_cap,
            })?;
        let points: Vec<Vec<Elem>> = (0..len).map(|i| codec.decode(i)).collect();
        self.eval_points(alg, &points)
    }

    /// Evaluates the term at every point, sharing work across common subterms.
    pub fn eval_points(&self, alg: &FiniteAlgebra, points: &[Vec<Elem>]) -> Result<Vec<Elem>> {
        self.validate(alg)?;
        let mut memo: HashMap<*const Term, Arc<Vec<Elem>>> = HashMap::new();
        let out = self.eval_vec(alg, points, &mut memo)?;
        Ok(Arc::try_unwrap(out).unwrap_or_else(|a| (*a).clone()))
    }

    fn eval_vec(
        &self,
        alg: &FiniteAlgebra,
        points: &[Vec<Elem>],
        memo: &mut HashMap<*const Term, Arc<Vec<Elem>>>,
    ) -> Result<Arc<Vec<Elem>>> {
        let key = self as *const Term;
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let out = match self {
            Term::Var(i) => points
                .iter()
                .map(|p| p.get(*i).copied().ok_or(Error::MissingVariable(*i)))
                .collect::<Result<Vec<_>>>()?,
            Term::Const(c) => vec![*c; points.len()],
            Term::Apply { symbol, args } => {
                let op = alg
                    .operation(symbol)
                    .ok_or_else(|| Error::UnknownSymbol(symbol.clone()))?;
                let cols = args
                    .iter()
                    .map(|a| a.eval_vec(alg, points, memo))
                    .collect::<Result<Vec<_>>>()?;
                let mut buf = vec![0; cols.len()];
                (0..points.len())
                    .map(|r| {
                        for (b, c) in buf.iter_mut().zip(&cols) {
                            *b = c[r];
                        }
                        op.apply(&buf, alg.size())
                    })
                    .collect()
            }
        };
        let out = Arc::new(out);
        memo.insert(key, out.clone());
        Ok(out)
    }

    /// Replaces every variable `x{i}` by `subs[i]`.
    pub fn substitute(self: &Arc<Term>, subs: &[Arc<Term>]) -> Arc<Term> {
        let mut memo = HashMap::new();
        self.subst_inner(subs, &mut memo)
    }

    fn subst_inner(
        self: &Arc<Term>,
        subs: &[Arc<Term>],
        memo: &mut HashMap<*const Term, Arc<Term>>,
    ) -> Arc<Term> {
        if let Some(t) = memo.get(&Arc::as_ptr(self)) {
            return t.clone();
        }
        let out = match &**self {
            Term::Var(i) => subs[*i].clone(),
            Term::Const(_) => self.clone(),
            Term::Apply { symbol, args } => Term::apply(
                symbol.clone(),
                args.iter().map(|a| a.subst_inner(subs, memo)).collect(),
            ),
        };
        memo.insert(Arc::as_ptr(self), out.clone());
        out
    }

    /// Number of nodes counted as a DAG (shared subterms once).
    pub fn dag_size(self: &Arc<Term>) -> usize {
        let mut seen = HashMap::new();
        fn walk(t: &Arc<Term>, seen: &mut HashMap<*const Term, ()>) {
            if seen.insert(Arc::as_ptr(t), ()).is_some() {
                return;
            }
            if let Term::Apply { args, .. } = &**t {
                for a in args {
                    walk(a, seen);
                }
            }
        }
        walk(self, &mut seen);
        seen.len()
    }
}

/// Display as nested applications; shared subterms are printed in full, so
/// large derivations are truncated after a few thousand characters.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render(self, &mut s, 4096);
        f.write_str(&s)
    }
}

/// Parses the display syntax: `x0`, `#3`, `sym`, `sym(t, ...)`.
impl std::str::FromStr for Term {
    type Err = Error;

    fn from_str(text: &str) -> Result<Term> {
        let chars: Vec<char> = text.chars().collect();
        let mut pos = 0;
        let t = parse_term(&chars, &mut pos)?;
        skip_space(&chars, &mut pos);
        if pos != chars.len() {
            return Err(parse_error(&chars, pos, "trailing input"));
        }
        Ok(Arc::try_unwrap(t).unwrap_or_else(|t| (*t).clone()))
    }
}

fn parse_error(chars: &[char], pos: usize, what: &str) -> Error {
    let rest: String = chars[pos.min(chars.len())..].iter().take(12).collect();
    Error::Document(format!("term: {what} at character {pos} near `{rest}`"))
}

fn skip_space(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn is_symbol_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | '#'))
}

fn parse_term(chars: &[char], pos: &mut usize) -> Result<Arc<Term>> {
    skip_space(chars, pos);
    if chars.get(*pos) == Some(&'#') {
        *pos += 1;
        let start = *pos;
        while *pos < chars.len() && chars[*pos].is_ascii_digit() {
            *pos += 1;
        }
        let digits: String = chars[start..*pos].iter().collect();
        let c = digits.parse().map_err(|_| parse_error(chars, start, "expected a constant"))?;
        return Ok(Term::constant(c));
    }
    let start = *pos;
    while *pos < chars.len() && is_symbol_char(chars[*pos]) {
        *pos += 1;
    }
    if start == *pos {
        return Err(parse_error(chars, start, "expected a term"));
    }
    let word: String = chars[start..*pos].iter().collect();
    if let Some(i) = word.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
        return Ok(Term::var(i));
    }
    skip_space(chars, pos);
    let mut args = Vec::new();
    if chars.get(*pos) == Some(&'(') {
        *pos += 1;
        loop {
            args.push(parse_term(chars, pos)?);
            skip_space(chars, pos);
            match chars.get(*pos) {
                Some(',') => *pos += 1,
                Some(')') => {
                    *pos += 1;
                    break;
                }
                _ => return Err(parse_error(chars, *pos, "expected `,` or `)`")),
            }
        }
    }
    Ok(Term::apply(word, args))
}

fn render(t: &Term, out: &mut String, limit: usize) {
    if out.len() > limit {
        if !out.ends_with('…') {
            out.push('…');
        }
        return;
    }
    match t {
        Term::Var(i) => out.push_str(&format!("x{i}")),
        Term::Const(c) => out.push_str(&format!("#{c}")),
        Term::Apply { symbol, args } => {
            out.push_str(symbol);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    render(a, out, limit);
                }
                out.push(')');
            }
        }
    }
}
