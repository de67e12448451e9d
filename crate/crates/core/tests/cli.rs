use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fraclap");

const INTERVAL: &str = r#"{"dim": 1, "h": 0.0625, "box": [[-1, 1]], "shape": {"kind": "interval", "params": {"half_width": 1}}}"#;

fn fraclap(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("domain.json"), INTERVAL).unwrap();
    dir
}

#[test]
fn eigen_writes_versioned_report_and_is_reproducible() {
    let dir = workspace();
    let args = ["eigen", "--p", "3", "--s", "0.5", "--domain", "domain.json", "--seed", "11"];
    let first = fraclap(dir.path(), &[&args[..], &["--out", "a"]].concat());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = fraclap(dir.path(), &[&args[..], &["--out", "b"]].concat());
    assert_eq!(second.status.code(), Some(0));
    let report = json(&dir.path().join("a/eigen_report.json"));
    for key in ["lambda1", "mu2", "residuals", "iterations", "schema_version"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!(report["mu2"].as_f64().unwrap() >= report["lambda1"].as_f64().unwrap());
    for file in ["eigen_report.json", "u2.csv", "config.json"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/u2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x1,value"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn emitted_config_loads_back() {
    let dir = workspace();
    let out = fraclap(dir.path(), &["lens", "--p", "2", "--s", "0.4", "--domain", "domain.json", "--multistarts", "1", "--out", "run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("run/config.json");
    let cfg = fraclap::config::load_config(&path).unwrap();
    assert_eq!(cfg.q, Some(3.0));
    assert_eq!(cfg.multistarts, 1);
    assert_eq!(serde_json::to_value(&cfg).unwrap(), json(&path));
    // rerunning from the emitted config reproduces the report
    let again = fraclap(dir.path(), &["lens", "--config", "run/config.json", "--out", "again"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("run/nehari_report.json")).unwrap(),
        std::fs::read(dir.path().join("again/nehari_report.json")).unwrap()
    );
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = workspace();
    let out = fraclap(dir.path(), &["eigen", "--p", "2", "--s", "1", "--domain", "domain.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("order must be in (0,1)"));
    let out = fraclap(dir.path(), &["lens", "--p", "2", "--q", "2", "--s", "0.5", "--domain", "domain.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("superhomogeneity violated"));
    let out = fraclap(dir.path(), &["eigen", "--p", "2", "--s", "0.5", "--domain", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}

#[test]
fn polarize_round_trip_through_csv() {
    let dir = workspace();
    let mut csv = String::from("x1,value\n");
    for k in 0..32 {
        let x = -1.0 + 0.0625 * (k as f64 + 0.5);
        csv.push_str(&format!("{x},{}\n", (3.0 * x + 0.3).sin()));
    }
    std::fs::write(dir.path().join("u.csv"), csv).unwrap();
    let out = fraclap(
        dir.path(),
        &["polarize", "--input", "u.csv", "--a", "0.125", "--p", "2", "--s", "0.5", "--domain", "domain.json", "--out", "pol"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("pol/deficits.json"));
    assert!(report["deficits"]["seminorm_deficit"].as_f64().unwrap() >= -report["deficits"]["eps_num"].as_f64().unwrap());
    // the window grows by 2a to stay closed under the reflection
    let lines = std::fs::read_to_string(dir.path().join("pol/polarized.csv")).unwrap().lines().count();
    assert_eq!(lines, 1 + 36);
    let bad = fraclap(dir.path(), &["polarize", "--input", "u.csv", "--a", "0.1", "--p", "2", "--s", "0.5", "--domain", "domain.json"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn payne_reports_the_interval_nodal_set_as_a_violation() {
    let dir = workspace();
    let out = fraclap(dir.path(), &["payne", "--mode", "eigen", "--p", "2", "--s", "0.5", "--domain", "domain.json", "--report", "r.json", "--out", "py"]);
    // both supports reach the boundary, the single nodal point does not
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["touches_plus"], true);
    assert_eq!(r["touches_minus"], true);
    assert_eq!(r["nodal_touches"], false);
    assert_eq!(r["mode"], "eigen");
}

#[test]
fn inequality_sweep_and_thread_variable() {
    let dir = workspace();
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .env("FRAC_PLAP_THREADS", "1")
        .args(["verify-inequalities", "--sweep", "100", "--p-list", "1.5,2,3", "--seed", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("inequalities.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["results"].as_array().unwrap().len(), 3);
    let zero = fraclap(dir.path(), &["--threads", "0", "verify-inequalities", "--sweep", "1"]);
    assert_eq!(zero.status.code(), Some(1));
}
