use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).canonicalize().unwrap()
}

fn introbust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_introbust"))
        .args(args)
        .env_remove("INTROBUST_CACHE_DIR")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

/// A copy of the config `name` in `dir`, edited by `edit`. Relative paths
/// are made absolute first.
fn config_in(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut c: Value = serde_json::from_str(&std::fs::read_to_string(data(name)).unwrap()).unwrap();
    let root = data("");
    c["network"] = root.join(c["network"].as_str().unwrap()).to_str().unwrap().into();
    if let Some(p) = c["classifier"].get("path").and_then(Value::as_str) {
        c["classifier"]["path"] = root.join(p).to_str().unwrap().into();
    }
    edit(&mut c);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toy_is_not_robust() {
    let out = introbust(&["verify", "--config", arg(&data("toy.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["decision"], "NOT_ROBUST");
    assert!(report["lb"].as_f64().unwrap() >= 0.126 - 1e-9);
}

#[test]
fn three_node_upper_bound() {
    let out = introbust(&["ub", "--config", arg(&data("three_node.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let ub = json(&out)["value"].as_f64().unwrap();
    assert!((ub - 0.4).abs() < 1e-9, "{ub}");
}

#[test]
fn three_node_oracle() {
    let out = introbust(&["oracle", "--config", arg(&data("three_node.json"))]);
    assert!((json(&out)["exact"]["value"].as_f64().unwrap() - 0.4).abs() < 1e-9);
}

#[test]
fn epsilon_one_is_robust() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| c["epsilon"] = 1.0.into());
    let out = introbust(&["verify", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["decision"], "ROBUST");
}

#[test]
fn gap_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| {
        c["spec"]["variables"] = serde_json::json!(["model", "class", "risky", "age"]);
        c["epsilon"] = 0.35.into();
    });
    let out = introbust(&["verify", "--config", arg(&cfg)]);
    let report = json(&out);
    assert!(report["lb"].as_f64().unwrap() < 0.35 && report["ub"].as_f64().unwrap() > 0.35);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report["decision"], "INCONCLUSIVE");
}

#[test]
fn missing_network_is_an_operational_error() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| c["network"] = "/nonexistent/net.bif".into());
    for cmd in ["compile", "verify"] {
        let out = introbust(&[cmd, "--config", arg(&cfg)]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/net.bif"));
    }
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| c["epsilonn"] = 0.2.into());
    assert_eq!(introbust(&["verify", "--config", arg(&cfg)]).status.code(), Some(2));
}

#[test]
fn compile_reports_checked_ordering_and_cnf_size() {
    let out = introbust(&["compile", "--config", arg(&data("toy.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let rec = json(&out);
    assert_eq!(rec["ordering"], "topological");
    assert_eq!(rec["ordering_check_passed"], true);
    // 44 network and 33 classifier variables share the 6 feature indicators.
    assert_eq!(rec["cnf_vars"], 71);
}

#[test]
fn unordered_insurance_cnf_size() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "insurance.json", |c| c["ordering"] = "none".into());
    let rec = json(&introbust(&["compile", "--config", arg(&cfg)]));
    let n = rec["network_cnf_vars"].as_u64().unwrap();
    let f = rec["classifier_cnf_vars"].as_u64().unwrap();
    // Age, MakeModel and DrivHist have 3, 5 and 3 values.
    assert_eq!(rec["cnf_vars"].as_u64().unwrap(), n + f - 11);
}

#[test]
fn oracle_on_the_toy_network() {
    let r = json(&introbust(&["oracle", "--config", arg(&data("toy.json"))]));
    assert!((r["exact"]["value"].as_f64().unwrap() - 0.126).abs() < 5e-4);
    assert!((r["do_intervention"]["value"].as_f64().unwrap() - 0.0635).abs() < 5e-4);
    assert!((r["first_order"]["value"].as_f64().unwrap() - 0.12035).abs() < 1e-9);
    assert_eq!(r["witness_space"], 64.0);
}

#[test]
fn oracle_without_interventions() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| c["spec"]["variables"] = serde_json::json!([]));
    let r = json(&introbust(&["oracle", "--config", arg(&cfg)]));
    let p = r["marginal"].as_f64().unwrap();
    assert_eq!(r["exact"]["value"].as_f64().unwrap(), p);
    assert_eq!(r["do_intervention"]["value"].as_f64().unwrap(), p);
    assert_eq!(r["first_order"]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn oracle_cap_is_printed() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| c["budgets"] = serde_json::json!({"witness_cap": 10.0}));
    let out = introbust(&["oracle", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("64"));
}

fn without_seconds(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.remove("seconds");
        for x in m.values_mut() {
            *x = without_seconds(x.take());
        }
    }
    v
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "toy.json", |c| {
        c["spec"]["variables"] = serde_json::json!(["model", "class", "risky"]);
        c["budgets"] = serde_json::json!({"restarts": 4});
    });
    let run = || {
        let out = introbust(&["verify", "--config", arg(&cfg), "--seed", "7"]);
        without_seconds(json(&out))
    };
    assert_eq!(serde_json::to_string(&run()).unwrap(), serde_json::to_string(&run()).unwrap());
}

#[test]
fn out_flag_writes_the_report() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("report.json");
    let out = introbust(&["verify", "--config", arg(&data("toy.json")), "--out", arg(&path)]);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(without_seconds(written), without_seconds(json(&out)));
}

#[test]
fn cache_directory_is_used() {
    let dir = TempDir::new().unwrap();
    let run = |cmd: &str| {
        Command::new(env!("CARGO_BIN_EXE_introbust"))
            .args([cmd, "--config", arg(&data("toy.json"))])
            .env("INTROBUST_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("compile").status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].extension().unwrap(), "irac");
    let out = run("verify");
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["lb"].as_f64().unwrap() >= 0.126 - 1e-9);

    // A damaged cache is rebuilt rather than trusted.
    std::fs::write(&files[0], b"garbage").unwrap();
    assert_eq!(run("verify").status.code(), Some(1));
    assert_ne!(std::fs::read(&files[0]).unwrap(), b"garbage");
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn empty_table_is_header_only() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("t.csv");
    let out = introbust(&["table", "--out", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("config,network,spec_name"));
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn failing_rows_do_not_stop_the_table() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("t.csv");
    let missing = dir.path().join("missing.json");
    let out = introbust(&[
        "table",
        arg(&data("toy.json")),
        arg(&missing),
        arg(&data("three_node.json")),
        "--workers",
        "2",
        "--out",
        arg(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 3);
    let error = |r: &Vec<String>| r.last().unwrap().clone();
    assert_eq!(rows.iter().filter(|r| !error(r).is_empty()).count(), 1);
    let toy = rows.iter().find(|r| r[0].ends_with("toy.json")).unwrap();
    assert!(toy[6].parse::<f64>().unwrap() >= 0.126 - 1e-9);
    assert_eq!(toy[9], "NOT_ROBUST");
}

#[test]
fn info_lists_the_inputs() {
    let out = introbust(&["info", "--config", arg(&data("toy.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("accident") && text.contains("C1"));
}

#[test]
fn cnf_export_carries_the_variable_map() {
    let out = introbust(&["export-cnf", "--config", arg(&data("toy.json"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("c map 1 "));
    assert!(text.lines().any(|l| l.starts_with("p cnf 71 ")));
}
