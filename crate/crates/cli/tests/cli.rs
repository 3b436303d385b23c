use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn summing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_summing")).args(args).output().unwrap()
}

fn run_text(dir: &Path, name: &str, text: &str, extra: &[&str]) -> (Output, Option<Value>) {
    let cfg = dir.join(name);
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join(format!("{name}.report"));
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = summing(&args);
    let report = std::fs::read_to_string(&out).ok().map(|s| serde_json::from_str(&s).unwrap());
    (o, report)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bilinear(task: &str, coeffs: &str, extra: &str) -> String {
    format!(
        r#"{{
  "schema": 1,
  "spaces": [
    {{ "name": "X", "kind": "lq", "dim": 2, "q": 1 }},
    {{ "name": "Y", "kind": "lq", "dim": 2, "q": "inf" }}
  ],
  "operators": [ {{ "name": "T", "domains": ["X", "X"], "codomain": "Y", "coeffs": {coeffs} }} ],
  "task": "{task}"{extra}
}}"#
    )
}

#[test]
fn identity_on_l1_is_certified_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = configs().join("summing_identity_l1.json");
    let o = summing(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rep = &r["result"]["summing"];
    assert!((rep["lower_bound"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((rep["upper_bound"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(r["status"], "certified");
    assert!(stderr(&o).contains("timing:"));
}

#[test]
fn dimant_at_sigma_zero_matches_the_strongly_task() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = "[1.0, 0.2, -0.5, 0.7, 0.3, -1.0, 0.4, 0.9]";
    let (o1, d) = run_text(dir.path(), "d.json", &bilinear("dimant", coeffs, r#", "exponents": { "p": 2, "sigma": 0 }"#), &[]);
    let (o2, s) = run_text(dir.path(), "s.json", &bilinear("strongly", coeffs, r#", "exponents": { "p": 2 }"#), &[]);
    assert_ne!(o1.status.code(), Some(1), "{}", stderr(&o1));
    assert_ne!(o2.status.code(), Some(1), "{}", stderr(&o2));
    let (d, s) = (d.unwrap(), s.unwrap());
    for key in ["lower_bound", "upper_bound"] {
        let a = d["result"]["dimant"][key].as_f64().unwrap();
        let b = s["result"]["strongly"]["plain"][key].as_f64().unwrap();
        assert!((a - b).abs() <= 1e-9, "{key}: {a} vs {b}");
    }
}

#[test]
fn exponent_identity_violation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = bilinear("multi-ideal", "[1, 0, 0, 0, 0, 0, 0, 0]", r#",
  "exponents": { "p": 1, "p_j": [2, 3] }"#);
    let (o, report) = run_text(dir.path(), "bad.json", &text, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("exponent identity violated"), "{err}");
    assert!(err.contains("line 9"), "{err}");
    assert!(report.is_none());
}

#[test]
fn parse_and_reference_errors_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_text(dir.path(), "broken.json", "{\n  \"schema\": 1,\n  \"task\": summing\n}", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let text = bilinear("dimant", "[1, 0, 0, 0, 0, 0, 0, 0]", "").replace(r#""codomain": "Y""#, r#""codomain": "Z""#);
    let (o, _) = run_text(dir.path(), "unresolved.json", &text, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("unknown space `Z`") && err.contains("line 7"), "{err}");
}

#[test]
fn reports_are_deterministic_and_echo_their_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = bilinear("dimant", "[1.0, 0.2, -0.5, 0.7, 0.3, -1.0, 0.4, 0.9]", r#", "exponents": { "p": 1, "sigma": 0.25 }"#);
    let (_, a) = run_text(dir.path(), "a.json", &text, &["--seed", "7"]);
    let first = std::fs::read(dir.path().join("a.json.report")).unwrap();
    let (_, _) = run_text(dir.path(), "a.json", &text, &["--seed", "7"]);
    let second = std::fs::read(dir.path().join("a.json.report")).unwrap();
    assert_eq!(first, second);

    let a = a.unwrap();
    assert_eq!(a["environment"]["seed"], 7);
    let echoed = serde_json::to_string_pretty(&a["config"]).unwrap();
    let (o, b) = run_text(dir.path(), "echo.json", &echoed, &[]);
    assert_eq!(o.status.code(), a["status"].as_str().map(|s| if s == "certified" { 0 } else { 2 }));
    let b = b.unwrap();
    assert_eq!(a["config"], b["config"]);
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn gap_open_results_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = bilinear(
        "dimant",
        "[1.0, 0.2, -0.5, 0.7, 0.3, -1.0, 0.4, 0.9]",
        r#", "exponents": { "p": 2 }, "solver": { "summing": { "sip": { "max_iter": 1 } } }"#,
    );
    let (o, r) = run_text(dir.path(), "open.json", &text, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(r.unwrap()["status"], "gap-open");
}

#[test]
fn factorize_writes_measures_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let out = dir.path().join("r.json");
    let cfg = configs().join("multi_ideal_product.json");
    let o = summing(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(1), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let f = &r["result"]["factorize"]["multi-ideal"]["factorization"];
    assert!(f["pointwise"].as_f64().unwrap() <= 1e-8, "{f}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("measure,index,weight,point"));
    assert!(text.lines().any(|l| l.starts_with("factor1,")) && text.lines().any(|l| l.starts_with("factor2,")));
}

#[test]
fn verify_filters_rows_and_shows_failures() {
    let o = summing(&["verify", "--filter", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{table}");
    assert!(rows[0].trim_start().starts_with("4  PASS"), "{table}");

    let o = summing(&["verify", "--filter", "1", "--tolerance-scale", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}
