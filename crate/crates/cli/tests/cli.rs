use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn finalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finalg"))
        .args(args)
        .env_remove("FINALG_BUDGET")
        .output()
        .expect("binary runs")
}

fn structured(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.extend(["--format", "structured"]);
    let out = finalg(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (v, out.status.code().unwrap())
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finalg-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn growth_of_z2() {
    let (v, code) = structured(&["growth", "--builtin", "z2_group", "--power-cap", "4"]);
    assert_eq!(code, 0);
    let d: Vec<u64> = v["results"]["table"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["d"].as_u64().unwrap())
        .collect();
    assert_eq!(d, [1, 2, 3, 4]);
    assert_eq!(v["verdicts"]["d(4)"]["verdict"], "exact");
    assert_eq!(v["results"]["fit"]["class"], "linear");
}

#[test]
fn lattice_digraph_is_refuted() {
    let (v, code) = structured(&["trdigraph", "--builtin", "two_element_lattice"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdicts"]["digraph"]["verdict"], "refuted_nonsolvable");
    let cert = &v["witnesses"]["certificate"];
    assert_eq!(cert["neighborhood"], serde_json::json!([0, 1]));
    assert!(cert["unreachable"].is_array());
}

#[test]
fn given_polynomial_digraph() {
    let (v, code) = structured(&["trdigraph", "--builtin", "z2_group", "--polynomial", "+(+(x0,x1),x2)"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdicts"]["strongly_connected"]["verdict"], "yes");
    assert_eq!(v["witnesses"]["digraph"]["edges"].as_array().unwrap().len(), 4);
    let out = finalg(&["trdigraph", "--builtin", "z2_group", "--polynomial", "+(x0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = finalg(&["trdigraph", "--builtin", "z2_group", "--polynomial", "+(x0,x1)"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_of_product_example() {
    let (v, code) = structured(&["profile", "--builtin", "example_BxC"]);
    assert!(code == 0 || code == 3, "exit {code}");
    assert_eq!(v["verdicts"]["i"]["verdict"], "no");
    assert_eq!(v["verdicts"]["iii"]["verdict"], "yes");
    assert_eq!(v["verdicts"]["iv"]["empirical"], true);
    let evidence = v["verdicts"]["iii"]["evidence"].as_str().unwrap();
    assert!(v["witnesses"][evidence].is_string());
    let unknown = v["verdicts"]
        .as_object()
        .unwrap()
        .values()
        .any(|c| c["verdict"] == "unknown");
    assert_eq!(code == 3, unknown);
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["congruences", "--builtin", "example_A"][..],
        &["growth", "--builtin", "z3_group", "--power-cap", "3"][..],
        &["spread", "--builtin", "example_BxC", "--family", "0,4,8,12;0,1,2,3"][..],
    ] {
        let mut all = args.to_vec();
        all.extend(["--format", "structured"]);
        let one = finalg(&all);
        let two = Command::new(env!("CARGO_BIN_EXE_finalg"))
            .args(&all)
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .unwrap();
        assert_eq!(one.stdout, two.stdout, "{args:?}");
        assert_eq!(one.status.code(), Some(0));
    }
}

#[test]
fn exit_codes() {
    assert_eq!(finalg(&["maltsev", "--builtin", "nope"]).status.code(), Some(2));
    assert_eq!(finalg(&["maltsev"]).status.code(), Some(2));
    assert_eq!(
        finalg(&["maltsev", "--builtin", "z2_group", "--input", "x.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        finalg(&["maltsev", "--builtin", "z2_group", "--budget-elements", "0"]).status.code(),
        Some(2)
    );
    let out = finalg(&["maltsev", "--builtin", "nope"]);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("available"));

    let dir = scratch_dir("bad");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"name":"x","operations":[{"arity":1,"symbol":"f","table":[0,5]}],"schema_version":1,"size":2}"#).unwrap();
    let out = finalg(&["congruences", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("entry 1"));

    let (v, code) = structured(&["growth", "--builtin", "z2_group", "--power-cap", "3", "--budget-elements", "1"]);
    assert_eq!(code, 3);
    assert_eq!(v["verdicts"]["d(3)"]["verdict"], "unknown");
}

#[test]
fn export_and_reload() {
    let dir = scratch_dir("export");
    let path = dir.join("a.json");
    let out = finalg(&["catalog", "export", "example_A", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let from_file = structured(&["congruences", "--input", path.to_str().unwrap()]).0;
    let builtin = structured(&["congruences", "--builtin", "example_A"]).0;
    assert_eq!(from_file["results"], builtin["results"]);
    assert_eq!(builtin["results"]["count"], 5);
}

#[test]
fn human_format() {
    let out = finalg(&["maltsev", "--builtin", "z3_group"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("maltsev on z3_group"));
    assert!(text.contains("maltsev_polynomial: yes"));
}

#[test]
fn catalog_list_names_everything() {
    let (v, code) = structured(&["catalog", "list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = v["results"]["algebras"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, finalg::catalog::BUILTIN_NAMES);
}
