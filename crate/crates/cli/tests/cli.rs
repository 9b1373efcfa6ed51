use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const IDENTITY: &str = r#"{"dim": 2, "terms": [{"a": [[1, 0], [0, 1]], "b": [[1, 0], [0, 1]]}]}"#;
const SHIFT: &str = r#"{"dim": 2, "terms": [{"a": [[0, 1], [0, 0]], "b": [[1, 0], [0, 1]]}]}"#;

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_specbound"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    if let Some(s) = stdin {
        pipe.write_all(s.as_bytes()).unwrap();
    }
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn identity_is_bounded() {
    let f = file(IDENTITY);
    let r = json(&run(&["analyze", f.path().to_str().unwrap()], None));
    assert_eq!(r["verdict"]["status"], "BOUNDED");
    assert_eq!(r["length"], 1);
    assert!((r["spectral_norm_lower_bound"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(r["trace_vector"]["scalar"].is_array());
}

#[test]
fn left_shift_is_unbounded_with_witness() {
    let r = json(&run(&["analyze", "-"], Some(SHIFT)));
    assert_eq!(r["verdict"]["status"], "UNBOUNDED");
    let ratios = r["verdict"]["certificate"]["ratios"].as_array().unwrap();
    assert!(ratios.last().unwrap().as_f64().unwrap() >= 1e3);
}

#[test]
fn malformed_input_names_the_field() {
    let out = run(&["analyze", "-"], Some(r#"{"dim": 2, "terms": [{"a": [[1, 0], [0, 1]]}]}"#));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("terms[0]"));
    let out = run(&["analyze", "/nonexistent/op.json"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_blowup_outcomes() {
    let r = json(&run(&["search-blowup", "-"], Some(SHIFT)));
    assert_eq!(r["found"], true);
    let r = json(&run(&["search-blowup", "-", "--threshold", "2", "--budget", "500"], Some(IDENTITY)));
    assert_eq!(r["found"], false);
    assert!(r["best_ratio"].as_f64().unwrap() < 2.0);
    let out = run(&["search-blowup", "-", "--threshold", "-1"], Some(IDENTITY));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_operators_round_trip_through_analyze() {
    for (args, status) in [
        (vec!["gen", "triangular", "4"], "BOUNDED"),
        (vec!["gen", "form2", "5"], "BOUNDED"),
        (vec!["gen", "unbounded-seeded", "3"], "UNBOUNDED"),
    ] {
        let out = run(&args, None);
        assert!(out.status.success(), "{args:?}");
        let text = String::from_utf8(out.stdout).unwrap();
        let r = json(&run(&["analyze", "-"], Some(&text)));
        assert_eq!(r["verdict"]["status"], status, "{args:?}");
    }
    let r = json(&run(&["gen", "random", "2", "3"], None));
    assert_eq!(r["dim"], 3);
    assert_eq!(r["terms"].as_array().unwrap().len(), 2);
}

#[test]
fn gen_rejects_infeasible_requests() {
    let out = run(&["gen", "form2", "3"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires n ≥ 4"));
    assert_eq!(run(&["gen", "nonsense", "3"], None).status.code(), Some(2));
    assert_eq!(run(&["gen", "triangular", "1"], None).status.code(), Some(2));
}

#[test]
fn reports_are_reproducible() {
    let op = String::from_utf8(run(&["gen", "random", "3", "3", "--seed", "9"], None).stdout).unwrap();
    let a = run(&["analyze", "-", "--seed", "4"], Some(&op));
    let b = run(&["analyze", "-", "--seed", "4"], Some(&op));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn selftest_quick_passes_and_bad_tolerance_fails() {
    let r = json(&run(&["selftest", "--quick"], None));
    assert_eq!(r["pass"], true);
    assert!(r["suites"].as_array().unwrap().len() >= 8);
    let out = run(&["selftest", "--tol", "1e-10,10,1e-8"], None);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> =
        r["suites"].as_array().unwrap().iter().filter(|s| s["pass"] == false).map(|s| s["name"].as_str().unwrap()).collect();
    assert!(failed.contains(&"trace-central"));
}

#[test]
fn text_format() {
    let out = run(&["--format", "text", "analyze", "-"], Some(IDENTITY));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status        BOUNDED"));
}

#[test]
fn selftest_full_runs_every_suite() {
    let out = run(&["--format", "text", "selftest", "--full"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 8);
}
