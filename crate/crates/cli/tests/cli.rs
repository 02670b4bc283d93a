use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsor-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = run(&all);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

fn names(v: &Value) -> Vec<String> {
    let mut n: Vec<String> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    n.sort();
    n
}

#[test]
fn check_reports_the_fig1_counterexample() {
    let f = fixture("g_fig1");
    let (code, v) = json(&[
        "check",
        f.to_str().unwrap(),
        "--vertex",
        "d",
        "--toward",
        "c",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["agrees"], false);
    assert_eq!(v["counterexample"]["chip"], "c");
    assert_eq!(
        names(&v["counterexample"]["tree"]),
        ["ab", "bd", "ca", "cf"]
    );
    assert_eq!(v["gap"], serde_json::json!({"b": -1, "f": 1}));
}

#[test]
fn rotor_routes_the_fig1_tree() {
    let f = fixture("g_fig1");
    let args = [
        "rotor",
        f.to_str().unwrap(),
        "--tree",
        "ca,cf,ab,bd",
        "--chip",
        "c",
        "--sink",
        "d",
    ];
    let (code, v) = json(&args);
    assert_eq!(code, 0);
    assert_eq!(names(&v["tree"]), ["ab", "bd", "cd", "cf"]);
}

#[test]
fn bernardi_divisor_at_d() {
    let f = fixture("g_fig1");
    let args = [
        "bernardi",
        f.to_str().unwrap(),
        "--tree",
        "ca,cf,ab,bd",
        "--vertex",
        "d",
        "--toward",
        "c",
    ];
    let (code, v) = json(&args);
    assert_eq!(code, 0);
    assert_eq!(v["divisor"], serde_json::json!({"b": 1, "d": 1}));
}

#[test]
fn multigraph_is_consistent_with_the_theorem() {
    let f = fixture("g_rem");
    let (code, v) = json(&["verify-theorem", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["theorem_consistent"], true);
    assert_eq!(v["simple"], false);
    assert_eq!(v["planar"], false);
}

#[test]
fn witness_for_ex2_verifies() {
    let f = fixture("g_ex2");
    let (code, v) = json(&["witness", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["sink"], "a2");
    assert_eq!(v["chip"], "c");
    assert_eq!(v["provenance"], "prop-b-an");
    assert_eq!(v["verified"], true);
}

#[test]
fn decompose_case_two_fixture() {
    let f = fixture("case2_type_b");
    let (code, v) = json(&["decompose", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["kind"], "B");
    assert_eq!(v["h"]["type"], "II");
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(run(&["check", "no/such/file.json"]).status.code(), Some(2));
    let tri = fixture("triangle");
    assert_eq!(
        run(&["witness", tri.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let f = fixture("g_fig1");
    let bad_tree = [
        "rotor",
        f.to_str().unwrap(),
        "--tree",
        "ca,cf",
        "--chip",
        "c",
        "--sink",
        "d",
    ];
    assert_eq!(run(&bad_tree).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn small_enumeration_has_no_violations() {
    let (code, v) = json(&["enumerate", "--max-vertices", "4", "--max-edges", "6"]);
    assert_eq!(code, 0);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["graphs"], 44);
}

#[test]
fn shipped_fixtures_match_the_corpus() {
    let dir = std::env::temp_dir().join(format!("torsor-lab-fixtures-{}", std::process::id()));
    let out = run(&["fixtures", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let fresh = std::fs::read(&path).unwrap();
        let shipped = std::fs::read(fixture(&name)).unwrap();
        assert_eq!(fresh, shipped, "{name}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}
