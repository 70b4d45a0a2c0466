//! Resource limits shared by every search in the crate.
//!
//! Two kinds of limits exist. [`Limits`] guards materialization: a direct
//! power or an operation table larger than the cap is refused with
//! [`Error::CapExceeded`](crate::Error::CapExceeded). [`ClosureBudget`] bounds
//! the searches themselves; a search that hits its budget reports
//! [`Completeness::Partial`] instead of a verdict.

use std::time::{Duration, Instant};

/// Default cap on the number of elements of any materialized universe.
pub const DEFAULT_UNIVERSE_CAP: usize = 1 << 20;
/// Default cap on the number of cells of any single operation table.
pub const DEFAULT_TABLE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub universe_cap: usize,
    pub table_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            universe_cap: DEFAULT_UNIVERSE_CAP,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }
}

/// Bounds on a closure computation.
///
/// `max_elements` caps the number of distinct vectors a closure may hold (and,
/// in the generating-set search, the number of candidate closures tried),
/// `max_rounds` the number of frontier expansions, and the optional deadline
/// the wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureBudget {
    pub max_elements: usize,
    pub max_rounds: usize,
    pub deadline: Option<Instant>,
}

impl Default for ClosureBudget {
    fn default() -> Self {
        ClosureBudget {
            max_elements: 2_000_000,
            max_rounds: 10_000,
            deadline: None,
        }
    }
}

impl ClosureBudget {
    pub fn new(max_elements: usize, max_rounds: usize) -> Self {
        assert!(max_elements > 0 && max_rounds > 0, "budgets must be positive");
        ClosureBudget {
            max_elements,
            max_rounds,
            deadline: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.deadline = Some(Instant::now() + timeout);
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Whether a computed collection is known to be complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Completeness {
    Complete,
    Partial,
}

impl Completeness {
    pub fn is_complete(self) -> bool {
        self == Completeness::Complete
    }

    /// Combines two flags: the result is complete only if both are.
    pub fn and(self, other: Completeness) -> Completeness {
        if self.is_complete() && other.is_complete() {
            Completeness::Complete
        } else {
            Completeness::Partial
        }
    }
}

/// Three-valued outcome of a budget-limited search.
#[derive(Debug, Clone, PartialEq)]
pub enum Search<T> {
    Found(T),
    /// The search space was exhausted without a hit.
    NotFound,
    /// The budget ran out first; neither outcome is established.
    Unknown,
}

impl<T> Search<T> {
    pub fn found(&self) -> Option<&T> {
        match self {
            Search::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Search::Found(_))
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, Search::NotFound)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Search::Unknown)
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Search<U> {
        match self {
            Search::Found(t) => Search::Found(f(t)),
            Search::NotFound => Search::NotFound,
            Search::Unknown => Search::Unknown,
        }
    }
}
