use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shadowtrace")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn entropy_reports_log_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    let o = bin(&["entropy", "--system", "fullshift:2", "--eps", "3/4", "--n", "4..10", "--csv", p(&csv)]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["slope"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-9);
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,epsilon,epsilon_decimal,count,log_count");
    assert!(lines[1].starts_with("4,3/4,0.750000000000,32,"));
    assert_eq!(lines.len(), 8);
}

#[test]
fn fig1_chain_classes_hold_one_fixed_point_each() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("fig1.json");
    assert!(bin(&["construct", "fig1", "--net", "360", "--out", p(&sys)]).status.success());
    let o = bin(&["chain", "--system", p(&sys), "--delta", "1/100"]);
    assert!(o.status.success());
    let classes = json(&o)["classes"].as_array().unwrap().clone();
    assert_eq!(classes.len(), 3);
    for (c, fixed) in classes.iter().zip(["x", "y", "z"]) {
        let labels: Vec<&str> = c.as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
        assert!(labels.contains(&fixed));
    }
    // below the mesh the classes are exactly the fixed points
    let o = bin(&["chain", "--system", p(&sys), "--delta", "1/720"]);
    assert_eq!(json(&o)["classes"], serde_json::json!([["x"], ["y"], ["z"]]));
}

#[test]
fn certificate_verifies_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let o = bin(&[
        "horseshoe", "--system", "fullshift:2", "--point", "0", "--eps", "1/5", "--delta", "1/8", "--words", "5", "--out",
        p(&cert),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(bin(&["verify", p(&cert), "--system", "fullshift:2"]).status.success());

    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let word = v["coded"][5]["word"].clone();
    let pre = v["coded"][5]["witness"]["shadow_point"]["preperiod"].as_str().unwrap().to_string();
    let flipped: String = pre.chars().map(|c| if c == '0' { '1' } else { '0' }).collect();
    v["coded"][5]["witness"]["shadow_point"]["preperiod"] = flipped.into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let o = bin(&["verify", p(&bad), "--system", "fullshift:2"]);
    assert_eq!(o.status.code(), Some(1));
    let id: String = word.as_array().unwrap().iter().map(|d| d.to_string()).collect();
    assert!(String::from_utf8_lossy(&o.stderr).contains(&id));

    let o = bin(&["verify", p(&cert), "--system", "goldenmean"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn outputs_are_deterministic_across_worker_counts() {
    let args = ["shadow", "--system", "goldenmean", "--eps", "1/4", "--delta", "1/16", "--horizon", "8"];
    let a = bin(&[&["--workers", "1"][..], &args].concat());
    let b = bin(&[&["--workers", "4"][..], &args].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["verdict"], "shadowable");
}

#[test]
fn approximation_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("approx.json");
    let o = bin(&["approx", "--system", "fullshift:2", "--mu", "1/2@0,1/2@01", "--eps", "1/5", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin(&["verify", p(&out), "--system", "fullshift:2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\"pass\": true"));
}

#[test]
fn dstar_is_exact() {
    let o = bin(&["dstar", "--system", "fullshift:2", "--mu", "0", "--nu", "0"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["value"], "0");
}

#[test]
fn bad_inputs_have_distinct_exit_codes() {
    assert_eq!(bin(&["chain", "--system", "nosuch", "--delta", "1/2"]).status.code(), Some(2));
    assert_eq!(bin(&["chain", "--system", "fig1:360", "--delta", "x/2"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sys.json");
    std::fs::write(&f, r#"{"kind": "symbolic", "alphabet_size": 1, "transitions": [[1]], "extra": 0}"#).unwrap();
    assert_eq!(bin(&["chain", "--system", p(&f), "--delta", "1/2"]).status.code(), Some(3));
    let o = bin(&["horseshoe", "--system", "fig1:360", "--point", "0", "--eps", "1/20", "--delta", "1/100"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn accept_runs_selected_criteria() {
    let o = bin(&["accept", "--only", "6,9"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("[PASS] criterion  6"));
    assert!(s.contains("[PASS] criterion  9"));
    assert!(s.contains("2/2 criteria passed"));
}

#[test]
fn named_systems_are_cached() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shadowtrace"))
        .args(["construct", "example33", "--layers", "4", "--base", "20"])
        .env("SHADOWTRACE_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let cached = dir.path().join("example33_4_20.json");
    assert_eq!(std::fs::read_to_string(cached).unwrap().trim(), stdout(&o).trim());
}
