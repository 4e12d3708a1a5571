mod common;

use std::path::Path;

use common::fixture;
use search_explain::dataset::{write_jsonl, DatasetSplit, ExplanationRecord, SplitName};
use search_explain::gen::mock::{MockConfig, MockServer, Reply};
use search_explain::metrics::SampleScores;
use search_explain::runner::{
    run_eval, Manifest, MockKind, Overrides, RunConfig, Stage, CONFIG_FILE, GENERATIONS_FILE, MANIFEST_FILE,
    PROMPTS_FILE, SCORES_FILE,
};

fn fixture_config(out: &Path) -> RunConfig {
    let mut c = RunConfig::load(fixture("run.toml")).unwrap();
    c.dataset.dir = out.join("dataset");
    c.apply(&Overrides {
        out: Some(out.join("run")),
        ..Overrides::default()
    });
    c
}

fn synthetic_split(dir: &Path, n: u64) {
    let document = (0..150).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
    let records = (0..n)
        .map(|i| ExplanationRecord {
            record_id: i,
            query: format!("Query {}", i / 3),
            document: document.clone(),
            explanation: format!("Aspect number {i}"),
            page_id: i / 3,
            section_index: i % 3,
        })
        .collect();
    std::fs::create_dir_all(dir).unwrap();
    write_jsonl(&DatasetSplit { name: SplitName::Test, records }, dir.join("test.jsonl")).unwrap();
}

fn synthetic_config(dir: &Path, n: u64) -> RunConfig {
    synthetic_split(&dir.join("dataset"), n);
    let mut c = RunConfig::from_toml(
        "[dataset]\ndir = \"dataset\"\n[run]\nout = \"run\"\n[endpoint]\nmock = \"reference\"\nmax_concurrent = 16\n",
        dir,
    )
    .unwrap();
    c.validate().unwrap();
    c.run.label = "synthetic".into();
    c
}

#[tokio::test(flavor = "multi_thread")]
async fn reference_replies_give_identity_scores() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path());
    let outcome = run_eval(&config).await.unwrap();
    let out = &outcome.out_dir;
    for f in [
        PROMPTS_FILE,
        GENERATIONS_FILE,
        SCORES_FILE,
        MANIFEST_FILE,
        CONFIG_FILE,
        "results.md",
        "results.csv",
        "results.json",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert_eq!(outcome.corpus.rouge1, Some(1.0));
    assert_eq!(outcome.corpus.bertscore, Some(1.0));
    assert_eq!(outcome.corpus.failed, 0);
    for s in &outcome.scores {
        let m = s.meteor.unwrap();
        assert_eq!(m.score, 1.0 - 0.5 * (1.0 / m.matches as f64).powi(3));
    }
    let c = outcome.manifest.counts;
    assert_eq!((c.formatted, c.generated, c.scored), (outcome.scores.len(), outcome.scores.len(), outcome.scores.len()));
}

#[tokio::test(flavor = "multi_thread")]
async fn unrelated_constant_reply_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockServer::start(MockConfig::with_reply(Reply::constant("zzyzx"))).await.unwrap();
    let mut config = synthetic_config(dir.path(), 9);
    config.apply(&Overrides {
        endpoint: Some(mock.base_url()),
        ..Overrides::default()
    });
    let outcome = run_eval(&config).await.unwrap();
    assert_eq!(outcome.corpus.rouge1, Some(0.0));
    assert_eq!(outcome.corpus.meteor, Some(0.0));
    assert_eq!(outcome.manifest.endpoint.mock, None);
}

#[tokio::test(flavor = "multi_thread")]
async fn default_limit_caps_large_splits() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path(), 1200);
    assert_eq!(config.run.limit, 1000);
    let outcome = run_eval(&config).await.unwrap();
    assert_eq!(outcome.scores.len(), 1000);
    assert_eq!(outcome.row.sample_count, 1000);
    let lines = std::fs::read_to_string(outcome.out_dir.join(SCORES_FILE)).unwrap();
    assert_eq!(lines.lines().count(), 1000);
}

#[tokio::test(flavor = "multi_thread")]
async fn repeated_runs_write_identical_scores() {
    let dir = tempfile::tempdir().unwrap();
    let a = fixture_config(&dir.path().join("a"));
    let mut b = a.clone();
    b.run.out = dir.path().join("b/run");
    let ra = run_eval(&a).await.unwrap();
    let rb = run_eval(&b).await.unwrap();
    let read = |p: &Path| std::fs::read(p.join(SCORES_FILE)).unwrap();
    assert_eq!(read(&ra.out_dir), read(&rb.out_dir));
    assert_eq!(ra.manifest.test_split_sha256, rb.manifest.test_split_sha256);
}

#[tokio::test(flavor = "multi_thread")]
async fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_eval(&fixture_config(dir.path())).await.unwrap();
    let text = std::fs::read_to_string(first.out_dir.join(MANIFEST_FILE)).unwrap();
    let manifest: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest.style, "natural");
    assert!(manifest.template.contains("{query}"));
    assert_eq!(manifest.endpoint.mock, Some(MockKind::Reference));

    let mut again = RunConfig::load(first.out_dir.join(CONFIG_FILE)).unwrap();
    assert_eq!(again, manifest.config);
    again.run.out = dir.path().join("again");
    let second = run_eval(&again).await.unwrap();
    assert_ne!(second.manifest.config_sha256, first.manifest.config_sha256);
    let read = |p: &Path| std::fs::read(p.join(SCORES_FILE)).unwrap();
    assert_eq!(read(&first.out_dir), read(&second.out_dir));
}

#[tokio::test(flavor = "multi_thread")]
async fn failed_generations_are_scored_as_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockServer::start(MockConfig {
        fail_when_contains: Some("Query 0 ".into()),
        ..MockConfig::echo()
    })
    .await
    .unwrap();
    let mut config = synthetic_config(dir.path(), 6);
    config.endpoint.base_backoff_ms = 1;
    config.apply(&Overrides {
        endpoint: Some(mock.base_url()),
        ..Overrides::default()
    });
    let outcome = run_eval(&config).await.unwrap();
    assert_eq!(outcome.corpus.failed, 3);
    let failed: Vec<&SampleScores> = outcome.scores.iter().filter(|s| !s.ok).collect();
    assert_eq!(failed.iter().map(|s| s.record_id).collect::<Vec<_>>(), [0, 1, 2]);
    assert!(failed.iter().all(|s| s.rouge1.unwrap().f == 0.0));
    assert_eq!(outcome.scores.len(), 6);
}

#[tokio::test(flavor = "multi_thread")]
async fn errors_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = synthetic_config(dir.path(), 3);
    config.dataset.dir = dir.path().join("missing");
    let err = run_eval(&config).await.unwrap_err();
    assert_eq!(err.stage, Stage::Dataset);
    assert!(err.to_string().starts_with("[dataset]"));

    let mut config = synthetic_config(dir.path(), 3);
    config.metrics.bertscore = true;
    let err = run_eval(&config).await.unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    assert!(err.message.contains("metrics.embeddings"));
}
