use serde_json::{json, Value};

use finalg::clone::Interpolant;
use finalg::commutator::CommutatorEngine;
use finalg::congruence::congruence_lattice;
use finalg::growth::{fit_growth, growth_table, verify_generating_set, DValue, GrowthClass, GrowthFit};
use finalg::io::Report;
use finalg::structure::cube::{pointed_cube_search, run_battery, template_battery, CubeTemplate, CubeWitness};
use finalg::structure::digraph::{solvability_digraph_check, TranslationDigraph};
use finalg::structure::maltsev::{has_maltsev_polynomial, has_maltsev_term, is_maltsev};
use finalg::structure::profile::{condition_profile, ProfileCaps, Verdict};
use finalg::structure::spread::{is_spread_of_type2_minimal_sets, spread_check, SpreadWitness};
use finalg::tct::{minimal_sets, traces_and_body, type_from_sets};
use finalg::{catalog, Completeness, Congruence, Elem, Error, FiniteAlgebra, Limits, Result, Search, Term};

use crate::Budget;

/// Prefix of flags that report a failed self-check.
pub const VIOLATION: &str = "invariant violation";

fn blocks(c: &Congruence) -> Value {
    json!(c.blocks())
}

fn yes_no(b: bool) -> Value {
    (if b { "yes" } else { "no" }).into()
}

fn search_verdict<T>(s: &Search<T>) -> Value {
    match s {
        Search::Found(_) => "yes",
        Search::NotFound => "no",
        Search::Unknown => "unknown",
    }
    .into()
}

fn completeness(c: Completeness) -> Value {
    (if c.is_complete() { "complete" } else { "unknown" }).into()
}

fn check(report: &mut Report, what: &str, ok: Result<bool>) -> Result<()> {
    match ok {
        Ok(true) => Ok(()),
        Ok(false) => {
            report.flags.push(format!("{VIOLATION}: {what} does not verify"));
            Ok(())
        }
        Err(e) => Err(e),
    }
}

pub fn catalog_list() -> Report {
    let mut r = Report::new("catalog list");
    let rows: Vec<Value> = catalog::all()
        .iter()
        .map(|a| {
            json!({
                "name": a.name(),
                "size": a.size(),
                "operations": a.operations().iter().map(|o| format!("{}/{}", o.symbol(), o.arity())).collect::<Vec<_>>(),
                "checksum": format!("{:016x}", catalog::table_checksum(a)),
            })
        })
        .collect();
    r.results.insert("algebras".into(), rows.into());
    r
}

pub fn catalog_show(alg: &FiniteAlgebra) -> Report {
    let mut r = Report::new("catalog show");
    r.algebra = Some(alg.name().to_string());
    r.results.insert("size".into(), alg.size().into());
    if let Some(names) = alg.element_names() {
        r.results.insert("element_names".into(), json!(names));
    }
    let ops: Vec<Value> = alg
        .operations()
        .iter()
        .map(|o| json!({"symbol": o.symbol(), "arity": o.arity(), "table": o.table()}))
        .collect();
    r.results.insert("operations".into(), ops.into());
    r.results
        .insert("checksum".into(), format!("{:016x}", catalog::table_checksum(alg)).into());
    r
}

pub fn congruences(alg: &FiniteAlgebra, max_congruences: usize) -> Result<Report> {
    let mut r = Report::new("congruences");
    r.parameters.insert("max_congruences".into(), max_congruences.into());
    let lat = congruence_lattice(alg, max_congruences)?;
    r.verdicts
        .insert("lattice".into(), json!({"verdict": completeness(lat.completeness())}));
    let list: Vec<Value> = lat
        .congruences()
        .iter()
        .enumerate()
        .map(|(i, c)| json!({"index": i, "classes": c.num_classes(), "blocks": blocks(c)}))
        .collect();
    r.results.insert("count".into(), lat.len().into());
    r.results.insert("bottom".into(), lat.bottom().into());
    r.results.insert("top".into(), lat.top().into());
    r.results.insert("congruences".into(), list.into());
    r.results.insert("covers".into(), json!(lat.covers()));
    Ok(r)
}

pub fn commutators(alg: &FiniteAlgebra) -> Result<Report> {
    let mut r = Report::new("commutators");
    let p = CommutatorEngine::new(alg)?.profile()?;
    r.verdicts.insert("abelian".into(), json!({"verdict": yes_no(p.abelian)}));
    r.verdicts.insert(
        "strongly_abelian".into(),
        json!({"verdict": yes_no(p.strongly_abelian), "evidence": "strong_violation"}),
    );
    r.verdicts.insert("solvable".into(), json!({"verdict": yes_no(p.solvable)}));
    r.verdicts
        .insert("left_nilpotent".into(), json!({"verdict": yes_no(p.left_nilpotent)}));
    if let Some(row) = p.strong_violation {
        r.witnesses.insert("strong_violation".into(), json!(row));
    }
    r.results
        .insert("derived_series".into(), p.derived_series.iter().map(blocks).collect());
    r.results
        .insert("lower_series".into(), p.lower_series.iter().map(blocks).collect());
    Ok(r)
}

pub fn tct(alg: &FiniteAlgebra, cover: Option<(usize, usize)>, max_congruences: usize, budget: &Budget) -> Result<Report> {
    let mut r = Report::new("tct");
    r.parameters.insert("max_congruences".into(), max_congruences.into());
    let lat = congruence_lattice(alg, max_congruences)?;
    let covers: Vec<(usize, usize)> = match cover {
        Some((i, j)) => {
            if i >= lat.len() || j >= lat.len() || !lat.covers().contains(&(i, j)) {
                return Err(Error::Precondition(format!("({i}, {j}) is not a covering pair of the lattice")));
            }
            r.parameters.insert("cover".into(), json!([i, j]));
            vec![(i, j)]
        }
        None => lat.covers().to_vec(),
    };
    if !lat.completeness().is_complete() {
        r.verdicts.insert("lattice".into(), json!({"verdict": "unknown"}));
    }
    let mut rows = Vec::new();
    for (i, j) in covers {
        let (alpha, beta) = (&lat.congruences()[i], &lat.congruences()[j]);
        let sets = minimal_sets(alg, alpha, beta, &budget.closure)?;
        let t = type_from_sets(alg, alpha, beta, &sets, &budget.closure)?;
        let key = format!("type[{i},{j}]");
        let verdict = t.label.as_str();
        if !sets.completeness.is_complete() && verdict != "unknown" {
            r.flags.push(format!("{key}: minimal sets listed from a partial clone"));
        }
        if t.budget_limited {
            r.flags.push(format!("{key}: essentially unary test stopped at its cap"));
        }
        r.verdicts.insert(key.clone(), json!({"verdict": verdict, "evidence": key}));
        let mut evidence = json!({
            "minimal_set": t.minimal_set,
            "trace": t.trace,
            "abelian_quotient": t.abelian_quotient,
        });
        if let Some(m) = &t.maltsev {
            evidence["trace_maltsev"] = m.witness.to_string().into();
        }
        if let Some(b) = &t.essential_binary {
            evidence["essential_binary"] = b.witness.to_string().into();
        }
        r.witnesses.insert(key, evidence);
        let first = sets.sets.first();
        let traces = match first {
            Some(s) => json!(traces_and_body(alpha, beta, &s.elements)?.traces),
            None => Value::Null,
        };
        rows.push(json!({
            "lower": i,
            "upper": j,
            "type": verdict,
            "minimal_sets": sets.sets.iter().map(|s| s.elements.clone()).collect::<Vec<_>>(),
            "minimal_set_count": sets.sets.len(),
            "minimal_sets_complete": sets.completeness.is_complete(),
            "traces_of_first": traces,
        }));
    }
    r.results.insert("prime_quotients".into(), rows.into());
    Ok(r)
}

fn maltsev_entry(r: &mut Report, alg: &FiniteAlgebra, key: &str, s: &Search<Interpolant>) -> Result<()> {
    r.verdicts
        .insert(key.into(), json!({"verdict": search_verdict(s), "evidence": key}));
    if let Search::Found(m) = s {
        r.witnesses.insert(key.into(), m.witness.to_string().into());
        check(r, key, is_maltsev(alg, m))?;
    }
    Ok(())
}

pub fn maltsev(alg: &FiniteAlgebra, budget: &Budget) -> Result<Report> {
    let mut r = Report::new("maltsev");
    let p = has_maltsev_polynomial(alg, &budget.closure)?;
    maltsev_entry(&mut r, alg, "maltsev_polynomial", &p)?;
    let t = has_maltsev_term(alg, &budget.closure)?;
    maltsev_entry(&mut r, alg, "maltsev_term", &t)?;
    Ok(r)
}

fn cube_witness(r: &mut Report, alg: &FiniteAlgebra, w: &CubeWitness) -> Result<()> {
    r.witnesses.insert(
        "pointed_cube".into(),
        json!({
            "template": w.template.to_string(),
            "constants": w.constant_values,
            "polynomial": w.polynomial.witness.to_string(),
        }),
    );
    check(r, "pointed cube witness", w.verify(alg))
}

pub fn cube(alg: &FiniteAlgebra, template: Option<&str>, battery: (usize, usize, usize), budget: &Budget) -> Result<Report> {
    let mut r = Report::new("cube");
    let result = match template {
        Some(text) => {
            let t = CubeTemplate::parse(text)?;
            r.parameters.insert("template".into(), t.to_string().into());
            pointed_cube_search(alg, &t, &budget.closure)?
        }
        None => {
            let (rows, constants, columns) = battery;
            let templates = template_battery(rows, constants, columns);
            r.parameters.insert(
                "battery".into(),
                json!({"rows": rows, "constants": constants, "columns": columns, "templates": templates.len()}),
            );
            let out = run_battery(alg, &templates, &budget.closure)?;
            r.results.insert("templates_tried".into(), out.templates_tried.into());
            r.results.insert("templates_unknown".into(), out.templates_unknown.into());
            if !out.result.is_found() {
                r.flags.push("verdict is relative to the template battery".into());
            }
            out.result
        }
    };
    r.verdicts.insert(
        "pointed_cube".into(),
        json!({"verdict": search_verdict(&result), "evidence": "pointed_cube"}),
    );
    if let Search::Found(w) = &result {
        cube_witness(&mut r, alg, w)?;
    }
    Ok(r)
}

fn digraph_json(d: &TranslationDigraph) -> Value {
    json!({"vertices": d.vertices, "edges": d.edges.iter().collect::<Vec<_>>()})
}

pub fn trdigraph(alg: &FiniteAlgebra, arity_cap: usize, polynomial: Option<&str>, budget: &Budget) -> Result<Report> {
    let mut r = Report::new("trdigraph");
    if let Some(text) = polynomial {
        let term: Term = text.parse()?;
        term.validate(alg)?;
        let arity = term.variable_bound().max(1);
        r.parameters.insert("polynomial".into(), term.to_string().into());
        r.parameters.insert("arity".into(), arity.into());
        let table = term.table(alg, arity, &Limits::default())?;
        let codec = finalg::TupleCodec::new(alg.size(), arity);
        let vertices: Vec<Elem> = alg.elements().collect();
        let d = TranslationDigraph::new(&vertices, arity, |args| table[codec.encode(args)])?;
        r.verdicts.insert(
            "strongly_connected".into(),
            json!({"verdict": yes_no(d.is_strongly_connected()), "evidence": "digraph"}),
        );
        let mut w = digraph_json(&d);
        if let Some(pair) = d.unreachable_pair() {
            w["unreachable"] = json!(pair);
        }
        r.witnesses.insert("digraph".into(), w);
        return Ok(r);
    }
    r.parameters.insert("arity_cap".into(), arity_cap.into());
    let c = solvability_digraph_check(alg, arity_cap, &budget.closure)?;
    r.verdicts.insert(
        "digraph".into(),
        json!({"verdict": c.verdict.as_str(), "evidence": "certificate"}),
    );
    r.results.insert("neighborhoods".into(), c.neighborhoods.into());
    r.results
        .insert("polynomials_checked".into(), c.polynomials_checked.into());
    r.results.insert("completeness".into(), completeness(c.completeness));
    if let Some(cert) = &c.certificate {
        r.witnesses.insert(
            "certificate".into(),
            json!({
                "neighborhood": cert.neighborhood,
                "arity": cert.arity,
                "polynomial": cert.polynomial.to_string(),
                "digraph": digraph_json(&cert.digraph),
                "unreachable": cert.unreachable,
            }),
        );
        check(&mut r, "digraph certificate", cert.verify(alg))?;
    }
    Ok(r)
}

fn parse_family(text: &str) -> Result<Vec<Vec<Elem>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|set| {
            set.split(',')
                .map(|e| {
                    e.trim()
                        .parse::<Elem>()
                        .map_err(|_| Error::Precondition(format!("`{}` is not an element", e.trim())))
                })
                .collect()
        })
        .collect()
}

fn spread_witness(r: &mut Report, alg: &FiniteAlgebra, w: &SpreadWitness) -> Result<()> {
    let (p, leaves) = w.polynomial();
    r.witnesses.insert(
        "spread".into(),
        json!({
            "polynomial": p.to_string(),
            "leaves": leaves,
            "depth": w.depth(),
            "derivation_steps": w.nodes.len(),
        }),
    );
    check(r, "spread derivation", w.replay(alg))
}

pub fn spread(alg: &FiniteAlgebra, family: Option<&str>, budget: &Budget) -> Result<Report> {
    let mut r = Report::new("spread");
    let (result, family) = match family {
        Some(text) => {
            let family = parse_family(text)?;
            for e in family.iter().flatten() {
                if *e as usize >= alg.size() {
                    return Err(Error::ElementOutOfRange {
                        element: *e,
                        size: alg.size(),
                    });
                }
            }
            r.parameters.insert("family".into(), json!(family));
            (spread_check(alg, &family, &budget.closure)?, family)
        }
        None => {
            r.parameters.insert("family".into(), "type 2 minimal sets".into());
            let t = is_spread_of_type2_minimal_sets(alg, &budget.closure)?;
            r.results.insert("covers_examined".into(), t.covers_examined.into());
            r.results.insert("covers_total".into(), t.covers_total.into());
            r.results.insert("type2_covers".into(), json!(t.type2_covers));
            r.results.insert("completeness".into(), completeness(t.completeness));
            (t.result, t.family)
        }
    };
    r.results.insert("family".into(), json!(family));
    r.verdicts.insert(
        "spread".into(),
        json!({"verdict": search_verdict(&result), "evidence": "spread"}),
    );
    if let Search::Found(w) = &result {
        spread_witness(&mut r, alg, w)?;
    }
    Ok(r)
}

fn d_value(v: DValue) -> Value {
    match v {
        DValue::Exact(d) => d.into(),
        DValue::Interval { lower, upper } => json!({"lower": lower, "upper": upper}),
    }
}

fn fit_json(fit: &GrowthFit) -> Value {
    let class = match fit.class {
        GrowthClass::Linear => "linear",
        GrowthClass::Exponential => "exponential",
        GrowthClass::Unknown => "unknown",
    };
    json!({
        "class": class,
        "points": fit.points,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "linear_residual": fit.linear_residual,
        "rate": fit.rate,
        "offset": fit.offset,
        "exponential_residual": fit.exponential_residual,
    })
}

pub fn growth(alg: &FiniteAlgebra, from: usize, to: usize, universe_cap: usize, budget: &Budget) -> Result<Report> {
    let mut r = Report::new("growth");
    r.parameters.insert("from".into(), from.into());
    r.parameters.insert("to".into(), to.into());
    r.parameters.insert("universe_cap".into(), universe_cap.into());
    let lattice = congruence_lattice(alg, 1 << 14)?;
    let report = growth_table(alg, to, universe_cap, Some(&lattice), &budget.closure)?;
    let mut rows = Vec::new();
    for e in report.entries.iter().filter(|e| e.n >= from) {
        let key = format!("d({})", e.n);
        let verdict = if e.value.exact().is_some() { "exact" } else { "unknown" };
        r.verdicts.insert(key.clone(), json!({"verdict": verdict, "evidence": key}));
        r.witnesses.insert(key.clone(), json!(e.witness));
        if !e.witness.is_empty() || e.value.upper() == 0 {
            check(&mut r, &format!("generating set for {key}"), verify_generating_set(alg, e.n, &e.witness))?;
        }
        rows.push(json!({"n": e.n, "d": d_value(e.value), "notes": e.notes}));
    }
    let last = report.entries.last().map_or(0, |e| e.n);
    if last < to {
        r.flags
            .push(format!("n > {last} not computed: the power exceeds the universe cap"));
    }
    r.results.insert("table".into(), rows.into());
    r.results.insert("fit".into(), fit_json(&fit_growth(&report)));
    Ok(r)
}

const CONDITION_KEYS: [&str; 6] = ["i", "ii", "iii", "iv", "v", "vi"];

pub fn profile(alg: &FiniteAlgebra, power_cap: Option<usize>, budget: &Budget) -> Result<Report> {
    let mut r = Report::new("profile");
    let mut caps = ProfileCaps {
        budget: budget.closure,
        ..ProfileCaps::default()
    };
    if let Some(p) = power_cap {
        caps.growth_n = p;
        caps.power_cap = p;
    }
    r.parameters.insert(
        "caps".into(),
        json!({
            "growth_n": caps.growth_n,
            "growth_universe_cap": caps.growth_cap,
            "power_cap": caps.power_cap,
            "power_size_cap": caps.power_size_cap,
            "battery": {"rows": caps.battery_rows, "constants": caps.battery_constants, "columns": caps.battery_columns},
            "battery_seconds": caps.battery_time.as_secs(),
            "power_seconds": caps.power_time.as_secs(),
        }),
    );
    let p = condition_profile(alg, &caps)?;
    for (k, key) in CONDITION_KEYS.iter().enumerate() {
        let c = p.condition(k + 1);
        let verdict = match c.verdict {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        };
        let evidence = format!("condition_{key}");
        r.verdicts.insert(
            (*key).into(),
            json!({
                "verdict": verdict,
                "empirical": c.empirical,
                "qualifiers": c.qualifiers,
                "evidence": evidence,
            }),
        );
        r.witnesses.insert(evidence, c.evidence.clone().into());
    }
    if let Some(m) = &p.maltsev {
        check(&mut r, "Maltsev polynomial", is_maltsev(alg, m))?;
    }
    if let Some(w) = &p.cube {
        check(&mut r, "pointed cube witness", w.verify(alg))?;
    }
    if let Some(w) = &p.spread {
        check(&mut r, "spread derivation", w.replay(alg))?;
    }
    for e in &p.growth.entries {
        if !e.witness.is_empty() {
            check(&mut r, &format!("generating set for d({})", e.n), verify_generating_set(alg, e.n, &e.witness))?;
        }
    }
    for (a, b) in p.implication_violations() {
        r.flags.push(format!(
            "{VIOLATION}: condition {} holds but condition {} fails",
            CONDITION_KEYS[a - 1],
            CONDITION_KEYS[b - 1]
        ));
    }
    let table: Vec<Value> = p
        .growth
        .entries
        .iter()
        .map(|e| json!({"n": e.n, "d": d_value(e.value)}))
        .collect();
    r.results.insert("growth_table".into(), table.into());
    r.results.insert("fit".into(), fit_json(&p.fit));
    if let Some((n, theta)) = &p.strongly_abelian_quotient {
        r.results.insert(
            "strongly_abelian_quotient".into(),
            json!({"power": n, "classes": theta.num_classes()}),
        );
    }
    Ok(r)
}
