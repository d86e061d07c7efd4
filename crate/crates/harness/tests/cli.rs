//! End-to-end runs of the `qbhardy` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_qbhardy");

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(BIN).args(args).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap(), String::from_utf8(o.stderr).unwrap())
}

#[test]
fn classify_writes_json_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"name":"pw","kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-0.5,"p":2}"#,
    );
    let out = dir.path().join("report.json");
    let (code, _, err) = run(&["classify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["status"], "pass");
    let sidecar = dir.path().join("report.000-pw.ratio.csv");
    let table = fs::read_to_string(sidecar).unwrap();
    assert!(table.starts_with("r,N/D\n"), "{table}");
}

#[test]
fn csv_summary_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.json",
        r#"{"kind":"grand-norm","function":{"kind":"power","exponent":-0.5},"weight":{"kind":"power","exponent":0},"p":2,"theta":1}"#,
    );
    let (code, out, _) = run(&["grand-norm", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("scenario,kind,status,ok,quantity,value,at"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[4], "grand_norm");
    assert!((row[5].parse::<f64>().unwrap() - 2.0).abs() < 1e-3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"kind":"classify","weight":{"kind":"power","exponent":0.5},"beta":-1.5,"p":2}"#);
    assert_eq!(run(&["classify", "--config", bad.to_str().unwrap()]).0, 2);

    let unknown = write(dir.path(), "unknown.json", r#"{"kind":"norm","colour":"red"}"#);
    assert_eq!(run(&["norm", "--config", unknown.to_str().unwrap()]).0, 2);

    let wrong_kind = write(dir.path(), "kind.json", r#"{"kind":"necessity","weight":{"kind":"power","exponent":0},"p":2,"theta":1}"#);
    assert_eq!(run(&["norm", "--config", wrong_kind.to_str().unwrap()]).0, 2);

    let failing = write(dir.path(), "fail.json", r#"{"kind":"classify","weight":{"kind":"power","exponent":1},"p":2}"#);
    assert_eq!(run(&["classify", "--config", failing.to_str().unwrap()]).0, 1);

    let expected = write(
        dir.path(),
        "expected.json",
        r#"{"scenarios":[{"kind":"classify","weight":{"kind":"power","exponent":1},"p":2,"expect":"fail"}]}"#,
    );
    assert_eq!(run(&["suite", "--config", expected.to_str().unwrap(), "--jobs", "2", "--strict"]).0, 0);

    let empty = write(dir.path(), "empty.json", "[]");
    assert_eq!(run(&["suite", "--config", empty.to_str().unwrap()]).0, 2);

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["suite", "--config", missing.to_str().unwrap()]).0, 1);
}

#[test]
fn tolerance_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.json",
        r#"{"kind":"norm","function":{"kind":"indicator","support":[0,1]},"weight":{"kind":"power","exponent":0},"p":2}"#,
    );
    let (code, out, _) = run(&["norm", "--config", cfg.to_str().unwrap(), "--tol", "0.001", "--seed", "7"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["scenario"]["tol"], 0.001);
    assert_eq!(report["constants"][0]["value"], 1.0);
}
