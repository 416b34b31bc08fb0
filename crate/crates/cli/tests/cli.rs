use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::NamedTempFile;

fn input(json: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(json.as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangleforge"))
        .args(args)
        .output()
        .unwrap()
}

fn run_on(sub: &str, file: &NamedTempFile, extra: &[&str]) -> Output {
    let path = file.path().to_str().unwrap();
    let mut args = vec![sub, "--input", path];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

const R8: &str = r#"{"kind":"r8_polymatroid","ell":1}"#;
const U26: &str = r#"{"kind":"matroid","source":{"uniform":{"r":2,"n":6}}}"#;
const C6: &str = r#"{"kind":"graph","edges":[[0,1],[1,2],[2,3],[3,4],[4,5],[5,0]]}"#;

#[test]
fn r8_has_exactly_one_tangle_of_order_four() {
    let f = input(R8);
    let o = run_on("tangles", &f, &["--k", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["members"].as_array().unwrap().len(), 9);
    assert_eq!(list[0]["robust"], Value::Bool(false));
}

#[test]
fn asymmetric_table_fails_check_with_symmetry_witness() {
    let f = input(r#"{"kind":"table","n":2,"lambda":[0,5,3,0]}"#);
    let o = run_on("check", &f, &[]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["ok"], Value::Bool(false));
    let first = &v["axioms"]["violations"][0];
    assert_eq!(first["axiom"], "symmetry");
    assert_eq!(first["x"], serde_json::json!([0]));
}

#[test]
fn u26_tree_dot_is_certified() {
    let f = input(U26);
    let o = run_on("tree", &f, &["--k", "2", "--dot", "--verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("graph tree {"));
    assert_eq!(dot.matches("shape=box").count(), 7);
}

#[test]
fn cycle_grows_a_daisy() {
    let f = input(C6);
    let o = run_on("flower", &f, &["--k", "2", "--set", "0,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["flower"]["class"], "daisy");
    assert_eq!(v["flower"]["petals"].as_array().unwrap().len(), 6);
}

#[test]
fn r8_flower_is_an_anemone_and_diagonal_seed_is_obstructed() {
    let f = input(R8);
    let o = run_on("flower", &f, &["--k", "4", "--petals", "1,2;3,4;5,6;7,8", "--dot"]);
    assert_eq!(o.status.code(), Some(0));
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.contains("label=\"A\""));
    assert!(!dot.contains("dashed"));
    let o = run_on("flower", &f, &["--k", "4", "--set", "1,2,3,4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("not robust"));
}

#[test]
fn oracle_agrees_on_the_cycle() {
    let f = input(C6);
    let o = run_on("oracle", &f, &["--k", "2", "--max-petals", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!(v["disagreements"].as_array().unwrap().is_empty());
    assert!(v["flowers"].as_array().unwrap().iter().any(|f| f["class"] == "daisy"));
}

#[test]
fn fcl_matches_oracle() {
    let f = input(R8);
    let o = run_on("fcl", &f, &["--k", "4", "--set", "1,2", "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["shown"], "{1,2}");
}

#[test]
fn separations_lists_classes() {
    let f = input(R8);
    let o = run_on("separations", &f, &["--k", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["classes"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes_for_usage_and_size() {
    let f = input(U26);
    assert_eq!(run_on("tangles", &f, &[]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&["tangles", "--input", "/nonexistent/x.json", "--k", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run_on("tree", &f, &["--k", "2", "--max-n", "4"]).status.code(), Some(3));
}

#[test]
fn output_is_deterministic() {
    let f = input(C6);
    let a = run_on("tree", &f, &["--k", "2"]);
    let b = run_on("tree", &f, &["--k", "2"]);
    assert_eq!(a.stdout, b.stdout);
}
