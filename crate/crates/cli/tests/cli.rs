use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn adjbai(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adjbai")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = adjbai(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn square(dir: &Path) {
    fs::write(dir.join("square.csv"), "x,y\n1,1\n1,-1\n-1,-1\n-1,1\n0.1,0.2\n").unwrap();
}

#[test]
fn adjacency_reports_square_edges() {
    let dir = tempfile::tempdir().unwrap();
    square(dir.path());
    let v = ok_json(dir.path(), &["adjacency", "--arms", "square.csv", "--oracle-check"]);
    assert_eq!(v["extreme"], serde_json::json!([0, 1, 2, 3]));
    assert_eq!(v["edges"].as_array().unwrap().len(), 4);
    assert!(v["witnesses"]["0-1"]["w"].is_array());
}

#[test]
fn json_arms_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("arms.json"), "[[1,0],[0,1],[-1,-1]]").unwrap();
    let v = ok_json(dir.path(), &["adjacency", "--arms", "arms.json"]);
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
}

#[test]
fn design_writes_allocation() {
    let dir = tempfile::tempdir().unwrap();
    square(dir.path());
    let v = ok_json(dir.path(), &["design", "--arms", "square.csv", "--kind", "g", "--round", "20"]);
    assert!((v["objective"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert!(v["converged"].as_bool().unwrap());
    let csv = fs::read_to_string(dir.path().join("allocation.csv")).unwrap();
    let total: usize = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 20);
}

#[test]
fn complexity_ratio_on_square() {
    let dir = tempfile::tempdir().unwrap();
    square(dir.path());
    let v = ok_json(dir.path(), &["complexity", "--arms", "square.csv", "--gap", "0.5", "--T", "200"]);
    assert!((v["ratio"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert_eq!(v["deg"], 2);
    assert!(v["lower_bound_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn hardpair_run_and_simulate_chain() {
    let dir = tempfile::tempdir().unwrap();
    square(dir.path());
    let m = ok_json(dir.path(), &["hardpair", "--arms", "square.csv", "--pair", "0,1", "--gap", "0.3", "--T", "40", "--out-dir", "hp"]);
    assert_eq!(m["pair"], serde_json::json!([0, 1]));
    assert!((m["objective"].as_f64().unwrap() - m["closed_form"].as_f64().unwrap()).abs() < 1e-8);
    let saved: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("hp/pair.json")).unwrap()).unwrap();
    assert_eq!(saved, m);

    let args = ["run", "--instance", "hp/instance_b.json", "--algo", "g", "--seed", "5", "--audit", "audit.json"];
    let r = ok_json(dir.path(), &args);
    assert_eq!(r["best"], 1);
    assert_eq!(ok_json(dir.path(), &args), r);
    let audit: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["schedule"].as_array().unwrap().len(), 40);
    assert_eq!(audit["chosen"], r["chosen"]);

    fs::write(
        dir.path().join("spec.json"),
        r#"{"instances":[{"name":"a","path":"hp/instance_a.json"}],"algorithms":["adjacent","g"],"budgets":[40],"trials":200,"seed":3}"#,
    )
    .unwrap();
    for jobs in ["1", "3"] {
        let out = adjbai(dir.path(), &["simulate", "--spec", "spec.json", "--out", &format!("r{jobs}.json"), "--jobs", jobs, "--csv", "r.csv"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let load = |p: &str| -> Value { serde_json::from_str(&fs::read_to_string(dir.path().join(p)).unwrap()).unwrap() };
    let (a, b) = (load("r1.json"), load("r3.json"));
    assert_eq!(a["schema"], 1);
    let errors = |v: &Value| v["cells"].as_array().unwrap().iter().map(|c| c["errors"].clone()).collect::<Vec<_>>();
    assert_eq!(errors(&a), errors(&b));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("instance,algo,T,trials,errors,rate,lo95,hi95,bound_lower,bound_upper,seconds"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("line.csv"), "1,1\n2,2\n3,3\n").unwrap();
    let out = adjbai(dir.path(), &["adjacency", "--arms", "line.csv"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
    let out = adjbai(dir.path(), &["hardpair", "--arms", "missing.csv", "--pair", "0,1", "--gap", "0.3", "--T", "10"]);
    assert!(!out.status.success());
    let out = adjbai(dir.path(), &["hardpair", "--arms", "x.csv", "--pair", "0;1", "--gap", "0.3", "--T", "10"]);
    assert!(!out.status.success());
}
