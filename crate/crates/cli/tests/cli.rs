use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LINE4: &str = r#"{"parties":[{"id":"1"},{"id":"2"},{"id":"3"},{"id":"4"}],
  "edges":[["1","2"],["2","3"],["3","4"]],"root":"1"}"#;
const STAR5: &str = r#"{"parties":[{"id":"hub"},{"id":"a"},{"id":"b"},{"id":"c"},{"id":"d"}],
  "edges":[["hub","a"],["hub","b"],["hub","c"],["hub","d"]],"root":"hub"}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("line4.json"), LINE4).unwrap();
        std::fs::write(dir.path().join("star5.json"), STAR5).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_treecost"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn json(&self, args: &[&str]) -> Value {
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn exact_cost_of_w4_on_a_line() {
    let ws = Workspace::new();
    let v = ws.json(&["cost", "exact", "--tree", "line4.json", "--state", "w4"]);
    assert_eq!(v["total"], 3.0);
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
    assert_eq!(v["label_map"][0]["id"], "1");
}

#[test]
fn ghz_on_a_star() {
    let ws = Workspace::new();
    let v = ws.json(&["cost", "exact", "--tree", "star5.json", "--state", "ghz5"]);
    assert_eq!(v["total"], 4.0);
}

#[test]
fn enumeration_covers_every_branch() {
    let ws = Workspace::new();
    for root in ["1", "2"] {
        let v = ws.json(&["simulate", "--tree", "line4.json", "--state", "w4", "--enumerate", "--root", root]);
        assert_eq!(v["summary"]["branches"], 64);
        assert!(v["summary"]["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
        assert_eq!(v["completeness_passes"], true);
    }
}

#[test]
fn insufficient_resource_exit_code() {
    let ws = Workspace::new();
    let out = ws.run(&["simulate", "--tree", "line4.json", "--state", "w4", "--resource", "e1=1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_input_exit_code() {
    let ws = Workspace::new();
    for args in [
        &["cost", "exact", "--tree", "missing.json", "--state", "w4"][..],
        &["cost", "exact", "--tree", "line4.json", "--state", "w5"],
        &["cost", "exact", "--tree", "line4.json", "--state", "w4", "--root", "9"],
        &["cost", "approx", "--tree", "line4.json", "--state", "w4", "--n", "2", "--eps", "3"],
    ] {
        assert_eq!(ws.run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sampled_runs_are_reproducible() {
    let ws = Workspace::new();
    let args = ["simulate", "--tree", "line4.json", "--state", "random:4", "--seed", "9", "--transcript", "t.json"];
    let first = ws.run(&args);
    let t1 = read(&ws.path("t.json"));
    let second = ws.run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(t1, read(&ws.path("t.json")));
}

#[test]
fn approximate_construction() {
    let ws = Workspace::new();
    std::fs::write(ws.path("thr.json"), r#"{"e1": 1.5}"#).unwrap();
    let v = ws.json(&[
        "approx", "--tree", "line4.json", "--state", "w4", "--n", "2", "--eps", "1.9", "--thresholds", "thr.json",
        "--enumerate",
    ]);
    let d = v["achieved_distance"].as_f64().unwrap();
    assert!(d > 0.0 && d <= v["bound"].as_f64().unwrap() + 1e-9);
    // one of the four block Schmidt vectors on e1 is cut
    assert_eq!(v["simulation"]["resources"][0], 3);
    assert!(v["simulation"]["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn cost_bounds_report() {
    let ws = Workspace::new();
    let v = ws.json(&["cost", "approx", "--tree", "line4.json", "--state", "w4", "--n", "100", "--eps", "0.04"]);
    let thr: Vec<f64> = v["thresholds"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((thr[0] - 0.04 / 2f64.sqrt()).abs() < 1e-9 && thr[1] == 0.0);
    assert!(v["total_lower"].as_f64().unwrap() <= v["total_upper"].as_f64().unwrap());
}

#[test]
fn figure_tables() {
    let ws = Workspace::new();
    let out = ws.run(&["figures", "w-second-order", "--out", "w.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&ws.path("w.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "N,a,b");
    assert_eq!(lines.len(), 22);
    assert!(lines[2].starts_with("4,0.811278124459,2.502075185"));

    let out = ws.run(&["figures", "rate-comparison"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1), Some("n,R_const,R_opt,R_lower"));
    assert!(text.lines().nth(2).unwrap().starts_with("10,"));
}

#[test]
fn verification_battery() {
    let ws = Workspace::new();
    let out = ws.run(&["verify", "--trials", "3", "--out", "v.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&read(&ws.path("v.json"))).unwrap();
    assert_eq!(v["passed"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}
