//! Algebra documents and analysis reports.
//!
//! Both are JSON. The canonical form has sorted keys and no whitespace, so
//! equal content always gives equal bytes. An algebra document looks like
//!
//! ```text
//! {"name":"z2_group","operations":[{"arity":2,"symbol":"+","table":[0,1,1,0]}],"schema_version":1,"size":2}
//! ```
//!
//! with an optional `element_names` list. Tables are flat, in the order of
//! [`TupleCodec`](crate::TupleCodec): the last argument varies fastest.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::algebra::{FiniteAlgebra, Operation};
use crate::error::{Error, Result};
use crate::Elem;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationDocument {
    arity: usize,
    symbol: String,
    table: Vec<u64>,
}

// fields in key order, so serialization is canonical
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    element_names: Option<Vec<String>>,
    name: String,
    operations: Vec<OperationDocument>,
    schema_version: u64,
    size: usize,
}

pub fn parse_algebra(bytes: &[u8]) -> Result<FiniteAlgebra> {
    let doc: AlgebraDocument = serde_json::from_slice(bytes)
        .map_err(|e| Error::Document(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Document(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    let mut operations = Vec::with_capacity(doc.operations.len());
    for op in doc.operations {
        if let Some((index, &value)) = op.table.iter().enumerate().find(|(_, &v)| v >= doc.size as u64) {
            return Err(Error::EntryOutOfRange {
                symbol: op.symbol,
                index,
                value,
                size: doc.size,
            });
        }
        let table: Vec<Elem> = op.table.iter().map(|&v| v as Elem).collect();
        operations.push(Operation::new(op.symbol, op.arity, table));
    }
    let alg = FiniteAlgebra::new(doc.name, doc.size, operations)?;
    match doc.element_names {
        Some(names) => alg.with_element_names(names),
        None => Ok(alg),
    }
}

/// The canonical document of `alg`.
pub fn write_algebra(alg: &FiniteAlgebra) -> String {
    let doc = AlgebraDocument {
        element_names: alg.element_names().map(|n| n.to_vec()),
        name: alg.name().to_string(),
        operations: alg
            .operations()
            .iter()
            .map(|op| OperationDocument {
                arity: op.arity(),
                symbol: op.symbol().to_string(),
                table: op.table().iter().map(|&e| e as u64).collect(),
            })
            .collect(),
        schema_version: SCHEMA_VERSION,
        size: alg.size(),
    };
    serde_json::to_string(&doc).expect("documents always serialize")
}

/// Rewrites any valid document in canonical form.
pub fn canonicalize(bytes: &[u8]) -> Result<String> {
    parse_algebra(bytes).map(|a| write_algebra(&a))
}

/// A structured analysis report. Maps are ordered by key, so rendering is
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub algebra: Option<String>,
    pub command: String,
    pub parameters: Map<String, Value>,
    /// Verdict name to a value, typically an object with a `verdict` field
    /// and an `evidence` id into `witnesses`.
    pub verdicts: Map<String, Value>,
    pub witnesses: Map<String, Value>,
    pub budgets: Map<String, Value>,
    /// Free-form markers such as budget exhaustion or cap-relative results.
    pub flags: Vec<String>,
    /// Command-specific results.
    pub results: Map<String, Value>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            ..Report::default()
        }
    }

    pub fn to_value(&self) -> Value {
        let mut flags = self.flags.clone();
        flags.sort();
        flags.dedup();
        let mut m = Map::new();
        m.insert("algebra".into(), self.algebra.clone().map_or(Value::Null, Value::String));
        m.insert("budgets".into(), Value::Object(self.budgets.clone()));
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("flags".into(), flags.into());
        m.insert("parameters".into(), Value::Object(self.parameters.clone()));
        m.insert("results".into(), Value::Object(self.results.clone()));
        m.insert("schema_version".into(), SCHEMA_VERSION.into());
        m.insert("verdicts".into(), Value::Object(self.verdicts.clone()));
        m.insert("witnesses".into(), Value::Object(self.witnesses.clone()));
        Value::Object(m)
    }

    /// Whether the string `unknown` appears anywhere among the verdicts.
    pub fn has_unknown(&self) -> bool {
        fn walk(v: &Value) -> bool {
            match v {
                Value::String(s) => s == "unknown",
                Value::Array(a) => a.iter().any(walk),
                Value::Object(o) => o.values().any(walk),
                _ => false,
            }
        }
        self.verdicts.values().any(walk)
    }
}

pub fn write_report(report: &Report) -> String {
    serde_json::to_string(&report.to_value()).expect("reports always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn z2_document() {
        let doc = br#"{"name":"z2_group","operations":[{"arity":2,"symbol":"+","table":[0,1,1,0]}],"schema_version":1,"size":2}"#;
        let alg = parse_algebra(doc).unwrap();
        assert_eq!(alg.operations()[0].table(), &[0, 1, 1, 0]);
        assert_eq!(write_algebra(&alg).as_bytes(), doc);
    }

    #[test]
    fn loose_document_canonicalizes() {
        let doc = br#"{ "size": 2, "schema_version": 1,
            "operations": [ { "table": [0, 1, 1, 0], "symbol": "+", "arity": 2 } ],
            "name": "z2_group" }"#;
        assert_eq!(
            canonicalize(doc).unwrap(),
            r#"{"name":"z2_group","operations":[{"arity":2,"symbol":"+","table":[0,1,1,0]}],"schema_version":1,"size":2}"#
        );
    }

    #[test]
    fn out_of_range_entry_is_located() {
        let doc = br#"{"name":"x","operations":[{"arity":2,"symbol":"+","table":[0,1,2,0]}],"schema_version":1,"size":2}"#;
        match parse_algebra(doc) {
            Err(Error::EntryOutOfRange { symbol, index, value, size }) => {
                assert_eq!((symbol.as_str(), index, value, size), ("+", 2, 2, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_documents() {
        let short = br#"{"name":"x","operations":[{"arity":2,"symbol":"+","table":[0,1,1]}],"schema_version":1,"size":2}"#;
        assert!(matches!(parse_algebra(short), Err(Error::TableLength { .. })));
        assert!(matches!(parse_algebra(b"{\"name\":"), Err(Error::Document(_))));
        let version = br#"{"name":"x","operations":[],"schema_version":2,"size":2}"#;
        assert!(matches!(parse_algebra(version), Err(Error::Document(_))));
        let extra = br#"{"name":"x","operations":[],"schema_version":1,"size":2,"colour":1}"#;
        assert!(matches!(parse_algebra(extra), Err(Error::Document(_))));
    }

    #[test]
    fn catalog_round_trips() {
        for alg in catalog::all() {
            let text = write_algebra(&alg);
            let back = parse_algebra(text.as_bytes()).unwrap();
            assert!(back.same_tables(&alg));
            assert_eq!(back.name(), alg.name());
            assert_eq!(back.element_names(), alg.element_names());
            assert_eq!(write_algebra(&back), text);
        }
    }

    #[test]
    fn empty_report() {
        let r = Report::new("noop");
        let text = write_report(&r);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "noop");
        assert_eq!(text, write_report(&r.clone()));
        assert!(!r.has_unknown());
    }

    #[test]
    fn unknown_detection() {
        let mut r = Report::new("x");
        r.verdicts.insert("a".into(), serde_json::json!({"verdict": "yes"}));
        assert!(!r.has_unknown());
        r.verdicts.insert("b".into(), serde_json::json!({"verdict": "unknown"}));
        assert!(r.has_unknown());
    }
}
