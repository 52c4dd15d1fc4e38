use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use artkit::policies::{run_experiment, uniform_two_stage, NormalMeans};
use artkit::SeedPlan;
use serde_json::Value;

fn art_kit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_art-kit"))
        .current_dir(dir)
        .env_remove("ART_KIT_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let start = text.find('{').expect("JSON on stdout");
    serde_json::from_str(&text[start..]).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("JSON error on stderr");
    serde_json::from_str(line).unwrap()
}

fn issue_fields(err: &Value) -> Vec<String> {
    err["error"]["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["field"].as_str().unwrap().to_string())
        .collect()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// CSV body with the provenance comment line removed.
fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn minimal_config_validates_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.json"), r#"{"command": "nmm-power-adaptive"}"#).unwrap();
    let out = art_kit(dir.path(), &["validate", "--config", "run.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok\n"));
    let v = stdout_json(&out);
    assert_eq!(v["params"]["epsilon"], 0.5);
    assert_eq!(v["params"]["p"], 15);
    assert_eq!(v["params"]["reweight"], "exp");
    assert!(!dir.path().join("artifacts").exists(), "validate must not write artifacts");
}

#[test]
fn out_of_range_epsilon_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"command": "nmm-power-adaptive", "params": {"epsilon": 1.5}}"#,
    )
    .unwrap();
    let out = art_kit(dir.path(), &["validate", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(issue_fields(&err), vec!["params.epsilon"]);
}

#[test]
fn replay_without_dataset_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = art_kit(dir.path(), &["validate", "conjoint-replay"]);
    assert_eq!(out.status.code(), Some(2));
    let fields = issue_fields(&stderr_json(&out));
    assert!(fields.contains(&"params.dataset".to_string()), "{fields:?}");
}

#[test]
fn every_offending_key_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"command": "nmm-sim", "params": {"n": 100, "bogus": 1, "also_bogus": true, "alpha": 2.0, "h0": "big"}}"#,
    )
    .unwrap();
    let out = art_kit(dir.path(), &["nmm-sim", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(2));
    let mut fields = issue_fields(&stderr_json(&out));
    fields.sort();
    assert_eq!(fields, vec!["params.alpha", "params.also_bogus", "params.bogus", "params.h0"]);

    fs::write(dir.path().join("top.json"), r#"{"command": "nmm-sim", "seed": 3, "extra": 1}"#).unwrap();
    let out = art_kit(dir.path(), &["validate", "--config", "top.json"]);
    assert_eq!(out.status.code(), Some(2));
    let mut fields = issue_fields(&stderr_json(&out));
    fields.sort();
    assert_eq!(fields, vec!["extra", "seed"]);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"command": "nmm-power-iid", "master_seed": 5, "params": {"h0": 4.0, "p": 5}}"#,
    )
    .unwrap();
    let out = art_kit(dir.path(), &["validate", "--config", "run.json", "--h0", "6", "--seed", "9", "--reps", "123"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["params"]["h0"], 6.0);
    assert_eq!(v["params"]["p"], 5);
    assert_eq!(v["params"]["n_mc"], 123);
    assert_eq!(v["settings"]["master_seed"], 9);
}

#[test]
fn same_seed_gives_identical_csv_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, workers: &'static str| {
        vec![
            "--seed", "11", "--workers", workers, "--output-dir", out, "nmm-sim", "--n", "80", "--p", "4", "--h0", "1.5",
            "--b", "19", "--reps", "30", "--policy", r#"{"kind":"two_stage","epsilon":0.5,"t":0.3}"#,
        ]
    };
    let a = art_kit(dir.path(), &args("a", "1"));
    let b = art_kit(dir.path(), &args("b", "3"));
    assert!(a.status.success() && b.status.success());
    let (va, vb) = (stdout_json(&a), stdout_json(&b));
    assert_eq!(va["config_hash"], vb["config_hash"]);
    let files: Vec<&str> = va["artifacts"].as_array().unwrap().iter().map(|p| p.as_str().unwrap()).collect();
    let csvs: Vec<&&str> = files.iter().filter(|f| f.ends_with(".csv")).collect();
    assert_eq!(csvs.len(), 2);
    for f in csvs {
        let name = Path::new(f).file_name().unwrap();
        let (pa, pb) = (dir.path().join("a").join(name), dir.path().join("b").join(name));
        assert_eq!(body(&pa), body(&pb), "{f}");
        let first = fs::read_to_string(&pa).unwrap();
        let header = first.lines().next().unwrap();
        assert!(header.contains("seed=11") && header.contains(va["config_hash"].as_str().unwrap()));
    }
}

#[test]
fn pvalue_of_a_recorded_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let policy = uniform_two_stage(3, 40, 0.5, 0.5).unwrap();
    let model = NormalMeans {
        theta: vec![0.0, 0.0, 1.5],
    };
    let record = run_experiment(&policy, &model, 40, SeedPlan::new(4)).unwrap();
    fs::write(dir.path().join("rec.json"), serde_json::to_string(&record).unwrap()).unwrap();
    let out = art_kit(
        dir.path(),
        &[
            "pvalue", "--record", "rec.json", "--b", "99", "--policy", r#"{"kind":"two_stage","epsilon":0.5,"t":0.5}"#,
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = stdout_json(&out)["result"]["p_value"].as_f64().unwrap();
    assert!((0.01..=1.0).contains(&p));
}

#[test]
fn replay_writes_pool_summary_and_power() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixtures().join("replay16.csv");
    let schema = fixtures().join("replay16_schema.json");
    let out = art_kit(
        dir.path(),
        &[
            "conjoint-replay",
            "--dataset",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--n",
            "6",
            "--b",
            "9",
            "--reps",
            "3",
            "--design",
            "iid",
            "--statistic",
            "f_stat",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["dataset_rows"], 16);
    assert_eq!(v["artifacts"].as_array().unwrap().len(), 4);
}

#[test]
fn runtime_failure_exits_three_with_indices() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixtures().join("replay16.csv");
    let schema = fixtures().join("replay16_schema.json");
    // One row per pool: fourteen draws from sixteen pools almost surely repeat a pool.
    let out = art_kit(
        dir.path(),
        &[
            "conjoint-replay",
            "--dataset",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--n",
            "14",
            "--b",
            "9",
            "--reps",
            "2",
            "--statistic",
            "f_stat",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "runtime");
    assert_eq!(err["error"]["failed_replications"], serde_json::json!([0, 1]));
}

#[test]
fn unknown_command_and_bad_workers_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = art_kit(dir.path(), &["validate", "nmm-everything"]);
    assert_eq!(out.status.code(), Some(2));
    let out = art_kit(dir.path(), &["--workers", "0", "validate", "nmm-sim"]);
    assert_eq!(out.status.code(), Some(2));
}
