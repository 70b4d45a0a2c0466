//! Plain-text rendering of a structured report.

use serde_json::Value;

const SECTIONS: [&str; 6] = ["verdicts", "witnesses", "results", "parameters", "budgets", "flags"];

fn inline(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::String(s) => Some(s.clone()),
        Value::Bool(_) | Value::Number(_) => Some(v.to_string()),
        Value::Array(a) if a.iter().all(|x| !x.is_object()) => {
            let parts: Option<Vec<String>> = a.iter().map(inline).collect();
            parts.map(|p| format!("[{}]", p.join(", ")))
        }
        Value::Object(o) if o.contains_key("verdict") => {
            let mut s = inline(&o["verdict"])?;
            let rest: Vec<String> = o
                .iter()
                .filter(|(k, _)| k.as_str() != "verdict")
                .map(|(k, v)| inline(v).map(|v| format!("{k}={v}")))
                .collect::<Option<_>>()?;
            if !rest.is_empty() {
                s += &format!(" ({})", rest.join(", "));
            }
            Some(s)
        }
        _ => None,
    }
}

fn block(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                match inline(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        block(x, indent + 2, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                match inline(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        block(x, indent + 2, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", inline(other).unwrap_or_default())),
    }
}

pub fn render(report: &Value) -> String {
    let mut out = String::new();
    let title = report["command"].as_str().unwrap_or("report");
    match report["algebra"].as_str() {
        Some(a) => out.push_str(&format!("{title} on {a}\n")),
        None => out.push_str(&format!("{title}\n")),
    }
    for s in SECTIONS {
        let v = &report[s];
        let empty = match v {
            Value::Object(o) => o.is_empty(),
            Value::Array(a) => a.is_empty(),
            _ => true,
        };
        if !empty {
            out.push_str(&format!("\n{s}:\n"));
            block(v, 2, &mut out);
        }
    }
    out
}
