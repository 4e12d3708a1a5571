use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_search-explain"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run(&["run", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("/nonexistent/run.toml"));
    assert_eq!(run(&["run"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--config", "x", "--bogus"]).status.code(), Some(2));
}

#[test]
fn fixture_run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&["run", "--config", path(&fixture("run.toml")), "--limit", "5", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["generations.jsonl", "scores.jsonl", "results.md", "results.csv", "results.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("| Reference mock | Mock |"), "{table}");
    assert!(table.contains("**1.0000**"));
}

#[test]
fn stages_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stages");
    let config = fixture("run.toml");
    let args = |cmd: &'static str| vec![cmd, "--config", path(&config), "--out", path(&out), "--style", "sep", "--limit", "3"];

    let o = run(&args("build-dataset"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("63 records"));

    let o = run(&args("format-prompts"));
    assert!(o.status.success(), "{}", stderr(&o));
    let prompts = std::fs::read_to_string(out.join("prompts.jsonl")).unwrap();
    assert_eq!(prompts.lines().count(), 3);
    assert!(prompts.contains(" [SEP] "));

    let o = run(&args("generate"));
    assert!(o.status.success(), "{}", stderr(&o));
    let mut score = args("score");
    score.extend(["--format", "csv"]);
    let o = run(&score);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("Model,Architecture,Parameters,METEOR"));

    let o = run(&["report", "--format", "json", path(&out.join("results.json")), path(&out.join("results.json"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
}

#[test]
fn score_without_embeddings_names_the_setting() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[metrics]\nbertscore = true\n").unwrap();
    let o = run(&["score", "--config", path(&config)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("metrics.embeddings"), "{}", stderr(&o));

    std::fs::write(&config, "[metrics]\nbertscore = true\nembeddings = \"vectors.jsonl\"\n").unwrap();
    let o = run(&["score", "--config", path(&config)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(path(&dir.path().join("vectors.jsonl"))), "{}", stderr(&o));
}

#[test]
fn runtime_failures_are_stage_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[dataset]\ndir = \"nowhere\"\n[endpoint]\nmock = \"echo\"\n").unwrap();
    let o = run(&["run", "--config", path(&config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[dataset]"), "{}", stderr(&o));
}
