use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gsnna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsnna")).args(args).env_remove("GSNNA_OUT_DIR").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn small_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_eggbox_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    for path in [&a, &b] {
        let out = gsnna(&["gen-eggbox", "--seed", "4", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,f"));
    assert_eq!(lines.count(), 4000);
}

#[test]
fn search_writes_artifacts_and_eval_reproduces_the_test_score() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg =
        small_config(tmp.path(), "[dataset]\ncount = 500\n[search]\nevals_per_iteration = 3\ndepth_cap = 2\n[training]\nmax_epochs = 30\n");
    let out = gsnna(&["search", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["trials.jsonl", "report.json", "layers.csv", "model.json", "test_split.csv", "config.toml"] {
        assert!(out_dir.join(file).is_file(), "{file} missing");
    }
    let rep = report(&out_dir);
    let test = rep["paper_best"]["test_score"].as_f64().unwrap();

    let eval = gsnna(&[
        "eval",
        "--json",
        "--model",
        out_dir.join("model.json").to_str().unwrap(),
        "--data",
        out_dir.join("test_split.csv").to_str().unwrap(),
    ]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let v: Value = serde_json::from_str(&stdout(&eval)).unwrap();
    assert_eq!(v["metric"], "r2");
    assert!((v["score"].as_f64().unwrap() - test).abs() < 1e-10);

    let sweep = gsnna(&["sweep-report", "--report", out_dir.join("report.json").to_str().unwrap()]);
    assert!(sweep.status.success());
    assert_eq!(stdout(&sweep), fs::read_to_string(out_dir.join("layers.csv")).unwrap());
    assert!(stdout(&sweep).starts_with("depth,best_val_score\n0,"));

    let resolved = fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert!(resolved.contains("evals_per_iteration = 3"));
}

#[test]
fn classification_eval_reports_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("bars");
    let cfg = small_config(
        tmp.path(),
        "[dataset]\nsource = \"builtin:bars\"\ncount = 300\nside = 6\n[search]\nfamily = \"cnn\"\nevals_per_iteration = 2\ndepth_cap = 1\n[training]\nmax_epochs = 5\n",
    );
    let out = gsnna(&["search", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval = gsnna(&[
        "eval",
        "--model",
        out_dir.join("model.json").to_str().unwrap(),
        "--data",
        out_dir.join("test_split.csv").to_str().unwrap(),
    ]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let text = stdout(&eval);
    assert!(text.starts_with("f1: ") && text.contains("accuracy: "), "{text}");
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        small_config(tmp.path(), "[dataset]\ncount = 200\n[search]\nevals_per_iteration = 1\ndepth_cap = 1\n[training]\nmax_epochs = 2\n");
    let from_env = tmp.path().join("env");
    let out =
        Command::new(env!("CARGO_BIN_EXE_gsnna")).args(["search", "--config", &cfg]).env("GSNNA_OUT_DIR", &from_env).output().unwrap();
    assert!(out.status.success());
    assert!(from_env.join("report.json").is_file());
    let from_flag = tmp.path().join("flag");
    let out = Command::new(env!("CARGO_BIN_EXE_gsnna"))
        .args(["search", "--config", &cfg, "--out-dir", from_flag.to_str().unwrap()])
        .env("GSNNA_OUT_DIR", &from_env)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(from_flag.join("report.json").is_file());
}

#[test]
fn zero_threshold_stops_after_the_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("zero");
    let cfg = small_config(
        tmp.path(),
        "[dataset]\ncount = 300\n[search]\nscore_threshold = 0.0\nevals_per_iteration = 2\n[training]\nmax_epochs = 10\n",
    );
    let out = gsnna(&["search", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let rep = report(&out_dir);
    let baseline = rep["baseline"]["val_score"].as_f64().unwrap();
    let run = rep["iterations_run"].as_u64().unwrap();
    assert_eq!(run == 0, baseline >= 0.0, "baseline {baseline}, iterations {run}");
}

#[test]
fn wrong_columns_are_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg =
        small_config(tmp.path(), "[dataset]\ncount = 200\n[search]\nevals_per_iteration = 1\ndepth_cap = 1\n[training]\nmax_epochs = 2\n");
    assert!(gsnna(&["search", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]).status.success());
    let model = out_dir.join("model.json");

    let renamed = tmp.path().join("renamed.csv");
    fs::write(&renamed, "a,b,f\n0.1,0.2,3.0\n").unwrap();
    let out = gsnna(&["eval", "--model", model.to_str().unwrap(), "--data", renamed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let labels = tmp.path().join("labels.csv");
    fs::write(&labels, "x,y,f\n0.1,0.2,cat\n0.3,0.4,dog\n").unwrap();
    let out = gsnna(&["eval", "--model", model.to_str().unwrap(), "--data", labels.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("task mismatch"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(gsnna(&["search", "--evals", "many"]).status.code(), Some(2));
    assert_eq!(gsnna(&["frobnicate"]).status.code(), Some(2));

    let bad = small_config(tmp.path(), "[search]\nscore_threshold = 3.0\n");
    assert_eq!(gsnna(&["search", "--config", &bad]).status.code(), Some(3));
    assert_eq!(gsnna(&["search", "--config", "/no/such/config.toml"]).status.code(), Some(3));

    let missing = tmp.path().join("nothing.json");
    let out = gsnna(&["eval", "--model", missing.to_str().unwrap(), "--data", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let garbage = tmp.path().join("garbage.json");
    fs::write(&garbage, "{\"format\": \"something-else\"}").unwrap();
    let out = gsnna(&["eval", "--model", garbage.to_str().unwrap(), "--data", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn exploding_learning_rate_fails_every_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("boom");
    let cfg = small_config(
        tmp.path(),
        "[dataset]\ncount = 300\n[search]\nevals_per_iteration = 2\ndepth_cap = 2\nscore_threshold = 1.0\n[training]\nlearning_rate = 1e6\nmax_epochs = 20\n",
    );
    let out = gsnna(&["search", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = fs::read_to_string(out_dir.join("trials.jsonl")).unwrap();
    assert!(lines.lines().skip(1).all(|l| l.contains("\"status\":\"diverged\"")), "{lines}");
}
