use std::path::Path;
use std::process::{Command, Output};

fn riccikit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccikit")).args(args).output().unwrap()
}

fn export(dir: &Path, id: &str) -> String {
    let p = dir.join(format!("{id}.rfm"));
    let out = riccikit(&["corpus", "export", id, p.to_str().unwrap()]);
    assert!(out.status.success());
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn expectation_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let f = export(dir.path(), "rr-3d");
    assert_eq!(riccikit(&["check", &f, "--condition", "rr", "--expect", "holds"]).status.code(), Some(0));
    assert_eq!(riccikit(&["check", &f, "--condition", "prs", "--expect", "holds"]).status.code(), Some(2));
    assert_eq!(riccikit(&["check", &f, "--condition", "co", "--expect", "fails"]).status.code(), Some(0));
    assert_eq!(riccikit(&["check", &f, "--condition", "classify", "--expect", "holds"]).status.code(), Some(2));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rfm");
    std::fs::write(&bad, "manifold t\ndim 2\ncoords x y\nmetric diag: 1, q\n").unwrap();
    let out = riccikit(&["check", bad.to_str().unwrap(), "--condition", "rr"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4:"));
    let missing = dir.path().join("missing.rfm");
    assert_eq!(riccikit(&["check", missing.to_str().unwrap(), "--condition", "rr"]).status.code(), Some(1));
    let f = export(dir.path(), "rr-3d");
    assert_eq!(riccikit(&["check", &f, "--condition", "nope"]).status.code(), Some(1));
    assert_eq!(riccikit(&["check", &f, "--condition", "qe2"]).status.code(), Some(1));
    assert_eq!(riccikit(&["check", &f, "--condition", "rr", "--points", "0"]).status.code(), Some(1));
    assert_eq!(riccikit(&["corpus", "verify", "nope"]).status.code(), Some(1));
}

#[test]
fn json_report_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let f = export(dir.path(), "qe2-4d3");
    let out = riccikit(&["check", &f, "--condition", "classify", "--points", "10", "--json", "-"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["timing_ms"], 0);
    assert_eq!(v["spec_hash"].as_str().unwrap().len(), 64);
    let ids: Vec<&str> = v["conditions"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["RR", "PRS", "CO", "QE1", "QE2"]);
    for c in v["conditions"].as_array().unwrap() {
        assert!(["holds", "fails", "inconclusive"].contains(&c["verdict"].as_str().unwrap()));
        assert!(c["notes"].is_array());
    }
    let timed = riccikit(&["check", &f, "--condition", "co", "--points", "5", "--json", "-", "--timing"]);
    let v: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["timing_ms"].as_u64().unwrap() >= 1);
}

#[test]
fn classify_notes_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let f = export(dir.path(), "rr-3d");
    let text = stdout(&riccikit(&["check", &f, "--condition", "classify"]));
    assert!(text.contains("RR in dimension 3 implies QE1: consistent"), "{text}");
}

#[test]
fn curvature_at_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let f = export(dir.path(), "rr-3d");
    // sc = −2e^{−x1}/x2
    let out = stdout(&riccikit(&["curvature", &f, "--at", "x1=0,x2=1,x3=0", "--tensor", "scalar"]));
    let sc: f64 = out.trim().trim_start_matches("sc = ").parse().unwrap();
    assert!((sc + 2.0).abs() < 1e-12, "{out}");
    let weyl = stdout(&riccikit(&["curvature", &f, "--at", "x1=0,x2=1,x3=-0.5", "--tensor", "weyl"]));
    assert!(weyl.contains("all components vanish"), "{weyl}");
    assert_eq!(riccikit(&["curvature", &f, "--at", "x1=0,x2=1"]).status.code(), Some(1));
}

#[test]
fn corpus_commands() {
    let list = stdout(&riccikit(&["corpus", "list"]));
    assert_eq!(list.lines().count(), 12);
    let out = riccikit(&["corpus", "verify", "prs-4d2", "--params", "m=2,c3=0.5"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert_eq!(riccikit(&["corpus", "verify", "all", "--params", "m=2"]).status.code(), Some(1));
    assert_eq!(riccikit(&["corpus", "verify", "rr-3d", "--params", "m=1"]).status.code(), Some(1));
}

#[test]
fn ode_runs() {
    let out = riccikit(&["ode", "run", "qe1-4d1", "--init", "1,0.3", "--range", "0:1", "--step", "0.001", "--verify", "qe1", "--points", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("first integral drift"));
    assert!(text.contains("QE1       holds"), "{text}");
    let out = riccikit(&["ode", "run", "rr-4d3", "--verify", "rr", "--points", "6", "--json", "-"]);
    let json = stdout(&out);
    let start = json.find('{').unwrap();
    let v: serde_json::Value = serde_json::from_str(&json[start..]).unwrap();
    assert!(v["conditions"][0]["notes"].to_string().contains("experimental"));
    assert_eq!(riccikit(&["ode", "run", "qe1-4d1", "--init", "-1,0.3"]).status.code(), Some(1));
    assert_eq!(riccikit(&["ode", "run", "qe1-4d1", "--params", "c7=1"]).status.code(), Some(1));
    assert_eq!(riccikit(&["ode", "run", "qe1-4d1", "--step", "0.3"]).status.code(), Some(1));
}
