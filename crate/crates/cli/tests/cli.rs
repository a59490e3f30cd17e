use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn gfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfc")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn config_file(name: &str, text: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn genus_examples() {
    for (k, level, genus) in [(2, 4, 5), (3, 3, 10), (4, 2, 3)] {
        let path = config_file(&format!("genus_{k}_{level}.json"), &format!(r#"{{"k": {k}, "level": {level}}}"#));
        let out = gfc(&["--config", &path, "genus"]);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert_eq!(v["genus_formula"], genus, "k={k} n={level}");
        assert_eq!(v["agree"], true);
    }
}

#[test]
fn monodromy_loops_compose_to_identity() {
    let out = gfc(&["monodromy"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["in_generator_group"] == true && r["order"] == 2));
}

#[test]
fn singleton_default_is_one_end() {
    let dot = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("gluing.dot");
    let out = gfc(&["ends", "--dot", dot.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["classification"]["ends"], 1);
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("graph"));
}

#[test]
fn hyper_writes_grid() {
    let csv = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("grid.csv");
    let out = gfc(&["hyper", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("re,im,abs_rhs,normalized\n"));
    assert_eq!(text.lines().count(), 1 + 40 * 40);
}

#[test]
fn exit_codes() {
    assert_eq!(gfc(&["--depth", "2", "ends"]).status.code(), Some(4));
    assert_eq!(gfc(&["hyper", "--bits", "2"]).status.code(), Some(2));
    assert_eq!(gfc(&["frobnicate"]).status.code(), Some(2));
    let unknown = config_file("unknown_key.json", r#"{"k": 2, "colour": "red"}"#);
    assert_eq!(gfc(&["--config", &unknown, "genus"]).status.code(), Some(2));
    let missing = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("does_not_exist.json");
    assert_eq!(gfc(&["--config", missing.to_str().unwrap(), "genus"]).status.code(), Some(2));
}

#[test]
fn verify_is_deterministic() {
    let (a, b) = (gfc(&["--seed", "5", "verify"]), gfc(&["--seed", "5", "verify"]));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 5);
}
