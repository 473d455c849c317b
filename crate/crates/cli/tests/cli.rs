use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn opfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opfree")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_all_passes_with_defaults() {
    let o = opfree(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("suite,identity,trials,max_residual,tol,pass,worst_trial,trial_seed\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn poincare_suite_reports_min_gap() {
    let o = opfree(&["verify", "--suite", "poincare", "--trials", "1000", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = report["rows"].as_array().unwrap().iter().find(|r| r["identity"] == "poincare_gap").unwrap();
    assert_eq!(row["trials"], 1000);
    assert!(row["max_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let a = dir.path().join(format!("a.{format}"));
        let b = dir.path().join(format!("b.{format}"));
        for out in [&a, &b] {
            let o = opfree(&["verify", "--seed", "7", "--trials", "10", "--format", format, "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}

#[test]
fn config_and_identity_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"algebra\": ");
    assert_eq!(opfree(&["verify", "--config", &bad]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.json", "{\"depth\": 3}");
    assert_eq!(opfree(&["verify", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(opfree(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    let o = opfree(&["verify", "--suite", "moments", "--trials", "20", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trial seed"));

    let diag = write(
        dir.path(),
        "diag.json",
        r#"{"algebra": {"kind": "diagonal", "dim": 3, "trace_weights": [0.2, 0.3, 0.5]}, "d": 3, "fock_depth": 5, "seed": 9}"#,
    );
    assert_eq!(opfree(&["verify", "--config", &diag, "--trials", "5"]).status.code(), Some(0));
}

#[test]
fn counterexample_tables() {
    let o = opfree(&["counterexample", "--n-max", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,lhs_sq,rhs_sq,min_C,closed_form_lhs,closed_form_rhs");
    assert_eq!(lines.len(), 11);
    let min_c: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(min_c.windows(2).all(|w| w[1] > w[0]));

    let o = opfree(&["counterexample", "--n-max", "1", "--format", "json"]);
    let table: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &table["rows"][0];
    let c = 6.0 / std::f64::consts::PI.powi(2);
    assert!((row["lhs_sq"].as_f64().unwrap() - c).abs() < 1e-12);
    assert!((row["rhs_sq"].as_f64().unwrap() - c * c).abs() < 1e-12);
    assert_eq!(table["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn counterexample_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-dir").join("t.csv");
    assert_eq!(opfree(&["counterexample", "--n-max", "3", "--out", missing.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(opfree(&["counterexample", "--n-max", "8", "--m", "5"]).status.code(), Some(2));
    let out = dir.path().join("t.json");
    let o = opfree(&["counterexample", "--n-max", "12", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("slope"));
    let table: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert!(table["slope"].as_f64().unwrap() > 0.3);
}

const SCALARS: &str = r#"{"kind": "diagonal", "dim": 1, "etas": [{"kraus": [[[[1, 0]]]]}]}"#;

#[test]
fn decompose_x_squared() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(r#"{{"algebra": {SCALARS}, "terms": [{{"letters": [1, 1], "coeffs": [[[[1, 0]]], [[[1, 0]]], [[[1, 0]]]]}}]}}"#);
    let p = write(dir.path(), "x2.json", &body);
    let o = opfree(&["decompose", &p]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("P = U_2(X_1) + 1\n"), "{text}");
    assert!(text.contains("reconstruction residual: 0e0"));
}

#[test]
fn decompose_constant_and_mixed() {
    let dir = tempfile::tempdir().unwrap();
    let b = r#"{"algebra": {"kind": "full", "dim": 2, "etas": [{"kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}]},
        "terms": [{"letters": [], "coeffs": [[[[1, 0], [2, 0]], [[0, 0], [3, 0]]]]}]}"#;
    let o = opfree(&["decompose", "--json", &write(dir.path(), "b.json", b)]);
    assert_eq!(o.status.code(), Some(0));
    let listing: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(listing["products"].as_array().unwrap().len(), 0);
    assert_eq!(listing["summary"], "b");

    let mixed = r#"{"algebra": {"kind": "full", "dim": 2, "etas": [
            {"kraus": [[[[1, 0], [0.5, 0]], [[0, 0], [1, 0]]], [[[1, 0], [0, 0]], [[0.5, 0], [1, 0]]]]},
            {"kraus": [[[[0.7, 0], [0, 0]], [[0, 0.3], [0.2, 0]]]]}]},
        "terms": [{"letters": [1, 2, 1], "coeffs": [
            [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], [[[0, 1], [1, 0]], [[0, 0], [2, 0]]],
            [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], [[[1, 0], [0, 0]], [[3, 0], [1, 0]]]]}]}"#;
    let o = opfree(&["decompose", "--json", &write(dir.path(), "m.json", mixed)]);
    assert_eq!(o.status.code(), Some(0));
    let listing: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(listing["residual"].as_f64().unwrap() <= 1e-10);
    for prod in listing["products"].as_array().unwrap() {
        let letters: Vec<u64> = prod["factors"].as_array().unwrap().iter().map(|f| f["letter"].as_u64().unwrap()).collect();
        assert!(letters.windows(2).all(|w| w[0] != w[1]));
    }
    assert!(listing["summary"].as_str().unwrap().contains("U_1(X_1)·U_1(X_2)·U_1(X_1)"));
}

#[test]
fn decompose_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(opfree(&["decompose", &write(dir.path(), "bad.json", "[1, 2")]).status.code(), Some(2));
    let wrong = format!(r#"{{"algebra": {SCALARS}, "terms": [{{"letters": [2], "coeffs": [[[[1, 0]]], [[[1, 0]]]]}}]}}"#);
    assert_eq!(opfree(&["decompose", &write(dir.path(), "wrong.json", &wrong)]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(opfree(&["decompose", missing.to_str().unwrap()]).status.code(), Some(3));
}
