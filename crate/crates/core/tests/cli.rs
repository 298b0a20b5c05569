use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reisda"))
}

fn gen_friedman(dir: &Path, extra: &[&str]) {
    let status = bin()
        .args(["gen", "friedman", "--out"])
        .arg(dir)
        .args(extra)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn write_config(path: &Path, value: &Value) {
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

#[test]
fn gen_friedman_defaults_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    gen_friedman(&a, &[]);
    gen_friedman(&b, &[]);
    assert_eq!(rows(&a.join("source.csv")).len(), 80);
    assert_eq!(rows(&a.join("target.csv")).len(), 41);
    assert_eq!(rows(&a.join("truth.csv")).len(), 41);
    assert_eq!(rows(&a.join("calibration.csv")).len(), 1);
    for f in ["source.csv", "target.csv", "calibration.csv", "truth.csv", "meta.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_shift_targets_are_source_rows() {
    let tmp = tempfile::tempdir().unwrap();
    gen_friedman(tmp.path(), &["--shift", "0"]);
    let source = rows(&tmp.path().join("source.csv"));
    let target = rows(&tmp.path().join("target.csv"));
    let meta: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("meta.json")).unwrap()).unwrap();
    let order: Vec<usize> = serde_json::from_value(meta["target_order"].clone()).unwrap();
    let mut seen = order.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..41).collect::<Vec<_>>());
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(target[k][..], source[i][..5]);
    }
}

#[test]
fn invalid_gen_flags_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen", "friedman", "--n-target", "81", "--out"])
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["gen", "friedman", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn minimal_run_writes_one_method() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_friedman(&data, &[]);
    let cfg = tmp.path().join("config.json");
    write_config(
        &cfg,
        &json!({
            "schema_version": 1,
            "dataset": {"bundle": "data"},
            "methods": [{"name": "baseline"}],
            "seeds": [7],
            "output_dir": "out"
        }),
    );
    let before = fs::read(data.join("source.csv")).unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(data.join("source.csv")).unwrap(), before);
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["methods"].as_array().unwrap().len(), 1);
    assert_eq!(report["methods"][0]["runs"][0]["seed"], 7);
    for f in ["table.csv", "predictions.csv", "traces.csv", "plot.svg", "timings.json"] {
        assert!(tmp.path().join("out").join(f).is_file(), "{f}");
    }
    let table = rows(&tmp.path().join("out/table.csv"));
    assert_eq!(table.len(), 1);
    let median: f64 = table[0][2].parse().unwrap();
    let stored = report["methods"][0]["summary"]["median_rmse"].as_f64().unwrap();
    assert!((median - stored).abs() < 1e-6);
    let preds = rows(&tmp.path().join("out/predictions.csv"));
    assert_eq!(preds.len(), 41);
    assert_eq!(preds[0].len(), 3);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    fs::write(&cfg, r#"{"schema_version": 1, "dataset": {"friedman": {}}, "seeds": [1], "output_dir": "out""#).unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());

    write_config(
        &cfg,
        &json!({
            "schema_version": 1,
            "dataset": {"bundle": "missing"},
            "methods": [{"name": "baseline"}],
            "seeds": [1],
            "output_dir": "out"
        }),
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failed_method_exits_1_and_still_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    write_config(
        &cfg,
        &json!({
            "schema_version": 1,
            "dataset": {"friedman": {}},
            "base": {"layer_sizes": [5, 4, 1], "learning_rate": 0.1, "epochs": 20},
            "methods": [{"name": "baseline"}, {"name": "kmm", "bandwidth": 0.5, "max_iter": 1, "tolerance": 1e-14}],
            "seeds": [1],
            "output_dir": "out"
        }),
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    let methods = report["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    let kmm = methods.iter().find(|m| m["name"] == "kmm").unwrap();
    assert!(kmm["runs"][0]["error"].is_string());
    let base = methods.iter().find(|m| m["name"] == "baseline").unwrap();
    assert!(base["runs"][0]["rmse"].is_number());
}

fn sweep_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("config.json");
    write_config(
        &cfg,
        &json!({
            "schema_version": 1,
            "dataset": {"friedman": {}},
            "base": {"layer_sizes": [5, 4, 1], "learning_rate": 0.1, "epochs": 10},
            "seeds": [3],
            "output_dir": "out"
        }),
    );
    cfg
}

#[test]
fn sweep_trace_lengths() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sweep_config(tmp.path());
    let out = bin().arg("sweep").arg(&cfg).args(["--etas", "2,3,5"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traces = rows(&tmp.path().join("out/traces.csv"));
    for (eta, len) in [("eta=2", 21), ("eta=3", 14), ("eta=5", 9)] {
        assert_eq!(traces.iter().filter(|r| r[1] == eta).count(), len, "{eta}");
    }
    assert!(tmp.path().join("out/plot.svg").is_file());

    let out = bin().arg("sweep").arg(&cfg).args(["--etas", "41", "--out"]).arg(tmp.path().join("one")).output().unwrap();
    assert!(out.status.success());
    assert_eq!(rows(&tmp.path().join("one/traces.csv")).len(), 1);

    let out = bin().arg("sweep").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("sweep").arg(&cfg).args(["--etas", "42"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_on_a_tiny_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    gen_friedman(tmp.path(), &["--n-source", "6", "--n-target", "3"]);
    let out = bin()
        .arg("oracle")
        .arg(tmp.path())
        .args(["--grid", "10,14,18,22", "--eta", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let fixed = v["fixed_labels"]["min_total_loss"].as_f64().unwrap();
    let renewing = v["renewing"]["min_total_loss"].as_f64().unwrap();
    assert!(v["isda"]["total_loss"].as_f64().unwrap() >= fixed);
    assert!(v["re_isda"]["total_loss"].as_f64().unwrap() >= renewing);
    assert!(renewing <= fixed);
}

#[test]
fn timeseries_bundle_runs_through_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen", "timeseries", "--subjects", "3", "--frames", "12", "--channels", "4", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let target = rows(&tmp.path().join("target.csv"));
    assert_eq!(target.len(), 12);
    assert_eq!(target[0].len(), 1 + 4 + 1);
    let cfg = tmp.path().join("small.json");
    write_config(
        &cfg,
        &json!({
            "schema_version": 1,
            "dataset": {"bundle": "."},
            "preprocessing": {"normalize": true, "pca_components": 3},
            "base": {"layer_sizes": [3, 4, 1], "learning_rate": 0.1, "epochs": 20},
            "methods": [{"name": "baseline"}, {"name": "tca", "latent_dim": 2}, {"name": "re_isda", "eta": 2}],
            "seeds": [0, 1],
            "output_dir": "out"
        }),
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["dataset"]["raw_features"], 8);
    assert_eq!(report["dataset"]["features"], 3);
    assert_eq!(report["dataset"]["target_order"], "keep_order");
    assert_eq!(report["dataset"]["calibration"], "first_target");
}
