use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn dataflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dataflow"))
        .args(args)
        .env("DATAFLOW_LOG", "off")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn analyze_unencrypted_shop_exits_one_with_database_violation() {
    let out = dataflow(&["analyze", path(&fixture("onlineshop.json")), "--constraints", path(&fixture("c1.dfdc"))]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["summary"]["violations"], 1);
    let v = &report["constraints"][0]["violations"];
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["node"], "n-database");
    assert!(report["violatingNodes"].get("n-database").is_some());
}

#[test]
fn analyze_encrypted_shop_exits_zero() {
    let out = dataflow(&[
        "analyze",
        path(&fixture("onlineshop-encrypted.json")),
        "--constraints",
        path(&fixture("c1.dfdc")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["summary"]["violations"], 0);
}

#[test]
fn text_report_names_the_database() {
    let out = dataflow(&[
        "analyze",
        path(&fixture("onlineshop.json")),
        "--constraints",
        path(&fixture("c1.dfdc")),
        "--format",
        "text",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n-database"), "{text}");
    assert!(text.ends_with("violations: 1\n"), "{text}");
}

#[test]
fn validate_well_formed_model_has_no_findings() {
    let out = dataflow(&["validate", path(&fixture("onlineshop.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out), serde_json::json!([]));
}

#[test]
fn validate_reports_dangling_flow_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(fixture("onlineshop.json")).unwrap()).unwrap();
    doc["dfd"]["flows"][0]["targetPin"] = "b-shop-out".into();
    let file = dir.path().join("broken.json");
    std::fs::write(&file, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out = dataflow(&["validate", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    let findings = stdout_json(&out);
    assert!(findings.as_array().unwrap().iter().any(|f| f["severity"] == "error"));

    doc["dfd"]["flows"][0]["target"] = "ghost".into();
    std::fs::write(&file, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out = dataflow(&["validate", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)[0]["code"], "unresolved-reference");
}

#[test]
fn usage_and_io_errors_exit_two() {
    let out = dataflow(&["analyze", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = dataflow(&["validate", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.json"));
    let out = dataflow(&["validate", path(&fixture("c1.dfdc"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(dataflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_constraint_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.dfdc");
    std::fs::write(&file, "constraint X: data Sensitivity.Personal never").unwrap();
    let out = dataflow(&["analyze", path(&fixture("onlineshop.json")), "--constraints", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn converted_adl_gives_the_same_violations() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("shop.json");
    let out = dataflow(&["convert", path(&fixture("shop.adl")), "--to", "dfd-json", "--out", path(&json)]);
    assert_eq!(out.status.code(), Some(0));
    let c1 = fixture("c1.dfdc");
    let direct = stdout_json(&dataflow(&["analyze", path(&fixture("shop.adl")), "--constraints", path(&c1)]));
    let via = stdout_json(&dataflow(&["analyze", path(&json), "--constraints", path(&c1)]));
    assert_eq!(direct["constraints"], via["constraints"]);
    assert_eq!(direct["violatingNodes"], via["violatingNodes"]);
    assert_eq!(direct["summary"]["violations"], 1);
    assert!(direct["trace"].as_object().is_some_and(|t| !t.is_empty()));
}

#[test]
fn convert_to_dot_and_tfg_dot_output() {
    let out = dataflow(&["convert", path(&fixture("shop.puml")), "--to", "dot"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));

    let dir = tempfile::tempdir().unwrap();
    let dots = dir.path().join("tfgs");
    let out = dataflow(&[
        "analyze",
        path(&fixture("branch.adl")),
        "--constraints",
        path(&fixture("c1.dfdc")),
        "--tfg-dot",
        path(&dots),
    ]);
    let report = stdout_json(&out);
    let files = std::fs::read_dir(&dots).unwrap().count();
    assert_eq!(report["summary"]["flowGraphs"].as_u64().unwrap() as usize, files);
    assert!(files >= 2);
}

#[test]
fn timings_are_opt_in() {
    let args = ["analyze", &*fixture("onlineshop.json").to_string_lossy(), "--constraints", &*fixture("c1.dfdc").to_string_lossy()]
        .map(String::from);
    let plain = stdout_json(&dataflow(&args.iter().map(String::as_str).collect::<Vec<_>>()));
    assert!(plain.get("timings").is_none());
    let mut with = args.to_vec();
    with.push("--timings".into());
    let timed = stdout_json(&dataflow(&with.iter().map(String::as_str).collect::<Vec<_>>()));
    assert!(timed["timings"]["totalMs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = dataflow(&[
        "bench",
        "--dimension",
        "labelPropagations",
        "--sizes",
        "1,5,20",
        "--repetitions",
        "2",
        "--out",
        path(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    let out = dataflow(&["bench", "--dimension", "nope", "--sizes", "1", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    let out = dataflow(&["bench", "--dimension", "parameters", "--sizes", "5,1", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(2));
}
