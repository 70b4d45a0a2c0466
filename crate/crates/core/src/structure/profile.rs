//! The six growth-restricting conditions, evaluated together.
//!
//! 1. a Maltsev polynomial exists;
//! 2. a pointed cube polynomial exists (searched over a template battery);
//! 3. the universe is a spread of the type 2 minimal sets;
//! 4. `d(n)` grows linearly (least-squares fit, empirical);
//! 5. `d(n)` does not grow exponentially (same fit, empirical);
//! 6. no power `A^n` has a nontrivial strongly abelian quotient (tested `n`).

use std::time::{Duration, Instant};

use crate::algebra::FiniteAlgebra;
use crate::budget::{ClosureBudget, Limits, Search};
use crate::clone::Interpolant;
use crate::commutator::{strongly_abelian_quotient_exists, QuotientSearch};
use crate::congruence::{congruence_lattice, Congruence};
use crate::error::{Error, Result};
use crate::growth::{fit_growth, growth_table, GrowthClass, GrowthFit, GrowthReport};
use crate::structure::cube::{run_battery, template_battery, CubeWitness};
use crate::structure::maltsev::has_maltsev_polynomial;
use crate::structure::spread::{is_spread_of_type2_minimal_sets, SpreadWitness};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub verdict: Verdict,
    /// Set for the growth conditions, which are read off finite data.
    pub empirical: bool,
    /// Limits of the verdict, such as the battery or the powers tested.
    pub qualifiers: Vec<String>,
    pub evidence: String,
}

impl ConditionResult {
    fn new(verdict: Verdict, evidence: impl Into<String>) -> Self {
        ConditionResult {
            verdict,
            empirical: false,
            qualifiers: Vec::new(),
            evidence: evidence.into(),
        }
    }

    fn qualified(mut self, q: impl Into<String>) -> Self {
        self.qualifiers.push(q.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct ProfileCaps {
    /// Largest `n` in the growth table.
    pub growth_n: usize,
    /// Largest power searched for `d(n)`.
    pub growth_cap: usize,
    /// Wall-clock limit for the growth table.
    pub growth_time: Duration,
    /// Largest `n` for which powers are searched for strongly abelian quotients.
    pub power_cap: usize,
    /// Largest power searched for strongly abelian quotients.
    pub power_size_cap: usize,
    pub max_congruences: usize,
    /// Wall-clock limit for the strongly abelian quotient search.
    pub power_time: Duration,
    pub battery_rows: usize,
    pub battery_constants: usize,
    pub battery_columns: usize,
    /// Wall-clock limit for the whole template battery.
    pub battery_time: Duration,
    /// Closure size limit for a single template and assignment.
    pub battery_elements: usize,
    pub budget: ClosureBudget,
}

impl Default for ProfileCaps {
    fn default() -> Self {
        ProfileCaps {
            growth_n: 4,
            growth_cap: 512,
            growth_time: Duration::from_secs(90),
            power_cap: 3,
            power_size_cap: 512,
            max_congruences: 1 << 14,
            power_time: Duration::from_secs(30),
            battery_rows: 3,
            battery_constants: 2,
            battery_columns: 4,
            battery_time: Duration::from_secs(20),
            battery_elements: 250_000,
            budget: ClosureBudget::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionProfile {
    pub algebra: String,
    pub conditions: [ConditionResult; 6],
    pub maltsev: Option<Interpolant>,
    pub cube: Option<CubeWitness>,
    pub spread: Option<SpreadWitness>,
    pub growth: GrowthReport,
    pub fit: GrowthFit,
    /// The power and congruence of a strongly abelian quotient, if found.
    pub strongly_abelian_quotient: Option<(usize, Congruence)>,
}

/// The implications that hold for every finite algebra, as pairs of
/// condition numbers.
pub const IMPLICATIONS: [(usize, usize); 6] = [(1, 4), (1, 2), (2, 5), (3, 4), (4, 5), (5, 6)];

impl ConditionProfile {
    pub fn condition(&self, k: usize) -> &ConditionResult {
        &self.conditions[k - 1]
    }

    pub fn verdict(&self, k: usize) -> Verdict {
        self.condition(k).verdict
    }

    /// Implications whose premise is `yes` and conclusion `no`. Unknown
    /// verdicts never count as violations.
    pub fn implication_violations(&self) -> Vec<(usize, usize)> {
        IMPLICATIONS
            .iter()
            .copied()
            .filter(|&(p, q)| self.verdict(p) == Verdict::Yes && self.verdict(q) == Verdict::No)
            .collect()
    }
}

fn time_boxed(budget: &ClosureBudget, limit: Duration) -> ClosureBudget {
    let own = Instant::now() + limit;
    ClosureBudget {
        deadline: Some(budget.deadline.map_or(own, |d| d.min(own))),
        ..*budget
    }
}

fn maltsev_condition(alg: &FiniteAlgebra, budget: &ClosureBudget) -> Result<(ConditionResult, Option<Interpolant>)> {
    Ok(match has_maltsev_polynomial(alg, budget)? {
        Search::Found(m) => (ConditionResult::new(Verdict::Yes, format!("polynomial {}", m.witness)), Some(m)),
        Search::NotFound => (ConditionResult::new(Verdict::No, "interpolation closure exhausted"), None),
        Search::Unknown => (ConditionResult::new(Verdict::Unknown, "budget exhausted"), None),
    })
}

fn cube_condition(alg: &FiniteAlgebra, caps: &ProfileCaps) -> Result<(ConditionResult, Option<CubeWitness>)> {
    let battery = template_battery(caps.battery_rows, caps.battery_constants, caps.battery_columns);
    let limits = format!(
        "battery of {} templates, rows ≤ {}, constants ≤ {}, columns ≤ {}",
        battery.len(),
        caps.battery_rows,
        caps.battery_constants,
        caps.battery_columns
    );
    let budget = ClosureBudget {
        max_elements: caps.budget.max_elements.min(caps.battery_elements),
        ..time_boxed(&caps.budget, caps.battery_time)
    };
    let out = run_battery(alg, &battery, &budget)?;
    Ok(match out.result {
        Search::Found(w) => {
            let text = format!("template {} with constants {:?}", w.template, w.constant_values);
            (ConditionResult::new(Verdict::Yes, text), Some(w))
        }
        Search::NotFound => (
            ConditionResult::new(Verdict::No, format!("{} templates exhausted", out.templates_tried)).qualified(limits),
            None,
        ),
        Search::Unknown => (
            ConditionResult::new(Verdict::Unknown, "budget or time limit reached before the battery was exhausted")
                .qualified(limits),
            None,
        ),
    })
}

fn spread_condition(alg: &FiniteAlgebra, budget: &ClosureBudget) -> Result<(ConditionResult, Option<SpreadWitness>)> {
    let r = is_spread_of_type2_minimal_sets(alg, budget)?;
    let summary = format!(
        "{} type 2 minimal sets from {} of {} prime quotients",
        r.family.len(),
        r.covers_examined,
        r.covers_total
    );
    Ok(match r.result {
        Search::Found(w) => {
            let (p, leaves) = w.polynomial();
            let text = format!("{summary}; {p} over {} sets", leaves.len());
            (ConditionResult::new(Verdict::Yes, text), Some(w))
        }
        Search::NotFound => (ConditionResult::new(Verdict::No, summary), None),
        Search::Unknown => (ConditionResult::new(Verdict::Unknown, summary), None),
    })
}

fn growth_conditions(report: &GrowthReport, fit: &GrowthFit) -> (ConditionResult, ConditionResult) {
    let table: Vec<String> = report.entries.iter().map(|e| format!("d({})={}", e.n, e.value)).collect();
    let text = format!(
        "{}; linear residual {:.3}, exponential residual {:.3}",
        table.join(", "),
        fit.linear_residual,
        fit.exponential_residual
    );
    let (iv, v) = match fit.class {
        GrowthClass::Linear => (Verdict::Yes, Verdict::Yes),
        GrowthClass::Exponential => (Verdict::No, Verdict::No),
        GrowthClass::Unknown => (Verdict::Unknown, Verdict::Unknown),
    };
    let mk = |verdict| {
        let mut c = ConditionResult::new(verdict, text.clone()).qualified(format!(
            "empirical fit over {} exact values",
            fit.points.len()
        ));
        c.empirical = true;
        c
    };
    (mk(iv), mk(v))
}

fn quotient_condition(alg: &FiniteAlgebra, caps: &ProfileCaps) -> Result<(ConditionResult, Option<(usize, Congruence)>)> {
    let limits = Limits {
        universe_cap: caps.power_size_cap,
        ..Limits::default()
    };
    let budget = time_boxed(&caps.budget, caps.power_time);
    let mut tested = 0;
    for n in 1..=caps.power_cap {
        if budget.expired() {
            break;
        }
        match strongly_abelian_quotient_exists(alg, n, caps.max_congruences, &limits, &budget) {
            Ok(QuotientSearch::Found(theta)) => {
                let text = format!("A^{n} modulo {theta} is strongly abelian");
                return Ok((ConditionResult::new(Verdict::No, text), Some((n, theta))));
            }
            Ok(QuotientSearch::None) => tested = n,
            Ok(QuotientSearch::Unknown) | Err(Error::CapExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(if tested == 0 {
        (ConditionResult::new(Verdict::Unknown, "no power could be searched"), None)
    } else {
        (
            ConditionResult::new(Verdict::Yes, format!("no strongly abelian quotient of A^n for n ≤ {tested}"))
                .qualified(format!("yes-for-tested-n: n ≤ {tested}")),
            None,
        )
    })
}

pub fn condition_profile(alg: &FiniteAlgebra, caps: &ProfileCaps) -> Result<ConditionProfile> {
    let ((first, second), (third, (growth, sixth))) = rayon::join(
        || rayon::join(|| maltsev_condition(alg, &caps.budget), || cube_condition(alg, caps)),
        || {
            rayon::join(
                || spread_condition(alg, &caps.budget),
                || {
                    rayon::join(
                        || -> Result<GrowthReport> {
                            let lattice = congruence_lattice(alg, caps.max_congruences)?;
                            let budget = time_boxed(&caps.budget, caps.growth_time);
                            growth_table(alg, caps.growth_n, caps.growth_cap, Some(&lattice), &budget)
                        },
                        || quotient_condition(alg, caps),
                    )
                },
            )
        },
    );
    let (i, maltsev) = first?;
    let (ii, cube) = second?;
    let (iii, spread) = third?;
    let growth = growth?;
    let (vi, strongly_abelian_quotient) = sixth?;
    let fit = fit_growth(&growth);
    let (iv, v) = growth_conditions(&growth, &fit);
    Ok(ConditionProfile {
        algebra: alg.name().to_string(),
        conditions: [i, ii, iii, iv, v, vi],
        maltsev,
        cube,
        spread,
        growth,
        fit,
        strongly_abelian_quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::growth::DValue;

    #[test]
    fn z2_profile() {
        let p = condition_profile(&catalog::z2_group(), &ProfileCaps::default()).unwrap();
        for k in [1, 2, 3, 4, 5, 6] {
            assert_eq!(p.verdict(k), Verdict::Yes, "condition {k}: {:?}", p.condition(k));
        }
        assert!(p.condition(4).empirical && p.condition(5).empirical);
        assert!(p.condition(6).qualifiers[0].starts_with("yes-for-tested-n"));
        assert!(p.implication_violations().is_empty());
    }

    #[test]
    fn bare_set_profile() {
        let alg = catalog::two_element_bare_set();
        let p = condition_profile(&alg, &ProfileCaps::default()).unwrap();
        assert_eq!(p.verdict(6), Verdict::No);
        assert_eq!(p.verdict(4), Verdict::No);
        assert_eq!(p.growth.value(1), Some(DValue::Exact(2)));
        assert_eq!(p.growth.value(2), Some(DValue::Exact(4)));
        assert!(p.implication_violations().is_empty());
    }
}
