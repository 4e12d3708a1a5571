use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{MockKind, RunConfig};
use super::report::{render_table, ResultsRow, TableFormat};
use crate::dataset::{build_dataset, read_jsonl, BuildOptions, DatasetCard, DatasetSplit, SplitName};
use crate::gen::mock::{MockConfig, MockServer, Reply};
use crate::gen::{aggregate_inference_time, GenClient, GenerationResult};
use crate::jsonl;
use crate::metrics::{
    corpus_aggregate, score_sample, CorpusScores, EmbeddingIndex, EmbeddingSide, IdfWeights, SampleScores,
    ScoringContext, SynonymTable,
};
use crate::prompt::{batch_format, FormattedExample};

pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Dataset,
    Prompts,
    Generate,
    Score,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Dataset => "dataset",
            Stage::Prompts => "prompts",
            Stage::Generate => "generate",
            Stage::Score => "score",
            Stage::Report => "report",
        })
    }
}

/// A fatal error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct RunError {
    pub stage: Stage,
    pub message: String,
}

impl RunError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        RunError {
            stage,
            message: message.into(),
        }
    }

    fn wrap(stage: Stage) -> impl FnOnce(&dyn std::error::Error) -> RunError {
        move |e| {
            let mut message = e.to_string();
            let mut source = e.source();
            while let Some(s) = source {
                message.push_str(": ");
                message.push_str(&s.to_string());
                source = s.source();
            }
            RunError { stage, message }
        }
    }
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, RunError>;
}

impl<T, E: std::error::Error> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, RunError> {
        self.map_err(|e| RunError::wrap(stage)(&e))
    }
}

fn create_dir(dir: &Path, stage: Stage) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::new(stage, format!("creating {}: {e}", dir.display())))
}

fn write_file(path: &Path, text: &str, stage: Stage) -> Result<(), RunError> {
    jsonl::write_atomic(path, |w| w.write_all(text.as_bytes())).map_err(|e| RunError::new(stage, format!("writing {}: {e}", path.display())))
}

/// Build train/dev/test files from the configured dump.
pub fn build_dataset_stage(config: &RunConfig) -> Result<DatasetCard, RunError> {
    let dump = config
        .dataset
        .dump
        .clone()
        .ok_or_else(|| RunError::new(Stage::Dataset, "dataset.dump is not set"))?;
    build_dataset(&BuildOptions {
        dump,
        out_dir: config.dataset.dir.clone(),
        split: config.dataset.split_config(),
    })
    .stage(Stage::Dataset)
}

/// The test split, truncated to the sample limit.
pub fn load_test_split(config: &RunConfig) -> Result<DatasetSplit, RunError> {
    let path = config.dataset.dir.join(SplitName::Test.file_name());
    let mut split = read_jsonl(&path, SplitName::Test).stage(Stage::Dataset)?;
    if split.records.len() > config.run.limit {
        tracing::info!(limit = config.run.limit, available = split.records.len(), "truncating test split");
        split.records.truncate(config.run.limit);
    }
    Ok(split)
}

pub fn format_prompts(config: &RunConfig, split: &DatasetSplit) -> Result<Vec<FormattedExample>, RunError> {
    batch_format(split, config.prompt.style, &config.prompt.templates).stage(Stage::Prompts)
}

/// Where generations were sent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointIdentity {
    pub base_url: String,
    pub model: String,
    pub mock: Option<MockKind>,
}

/// Send every prompt to the endpoint, or to an in-process mock when one is
/// configured.
pub async fn generate(
    config: &RunConfig,
    examples: &[FormattedExample],
) -> Result<(Vec<GenerationResult>, EndpointIdentity), RunError> {
    let mut endpoint = config.endpoint.endpoint_config();
    let mock = match config.endpoint.mock {
        None => None,
        Some(kind) => {
            let reply = match kind {
                MockKind::Reference => Reply::references(examples),
                MockKind::Echo => Reply::Echo,
            };
            let server = MockServer::start(MockConfig::with_reply(reply)).await.stage(Stage::Generate)?;
            endpoint.base_url = server.base_url();
            Some(server)
        }
    };
    let client = GenClient::new(endpoint).stage(Stage::Generate)?;
    let requests: Vec<_> = examples
        .iter()
        .map(|e| config.endpoint.request(e.record_id, &e.input_text))
        .collect();
    let results = client.generate_batch(&requests).await;
    drop(mock);
    let failed = results.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        tracing::warn!(failed, total = results.len(), "some generations failed");
    }
    let identity = EndpointIdentity {
        base_url: if config.endpoint.mock.is_some() {
            "in-process mock".into()
        } else {
            config.endpoint.base_url.clone()
        },
        model: config.endpoint.model.clone(),
        mock: config.endpoint.mock,
    };
    Ok((results, identity))
}

/// Score generations against the prompts' target texts, joined by record id.
pub fn score(
    config: &RunConfig,
    examples: &[FormattedExample],
    generations: &[GenerationResult],
) -> Result<Vec<SampleScores>, RunError> {
    config.check_metric_files().stage(Stage::Score)?;
    if examples.len() != generations.len() {
        return Err(RunError::new(
            Stage::Score,
            format!("{} prompts but {} generations", examples.len(), generations.len()),
        ));
    }
    let references: HashMap<u64, &str> = examples.iter().map(|e| (e.record_id, e.target_text.as_str())).collect();
    let synonyms = match &config.metrics.synonyms {
        Some(p) => SynonymTable::load(p)
            .map_err(|e| RunError::new(Stage::Score, format!("reading synonyms {}: {e}", p.display())))?,
        None => SynonymTable::new(),
    };
    let embeddings = match (&config.metrics.embeddings, config.metrics.bertscore) {
        (Some(p), true) => Some(EmbeddingIndex::load(p).stage(Stage::Score)?),
        _ => None,
    };
    let idf = match (&embeddings, config.metrics.idf) {
        (Some(index), true) => Some(IdfWeights::from_references(
            examples
                .iter()
                .filter_map(|e| index.get(e.record_id, EmbeddingSide::Reference))
                .map(|emb| emb.tokens()),
        )),
        _ => None,
    };
    let ctx = ScoringContext {
        metrics: config.metrics.metric_set(),
        synonyms: &synonyms,
        embeddings: embeddings.as_ref(),
        idf: idf.as_ref(),
        bleu_max_n: config.metrics.bleu_max_n,
    };
    generations
        .par_iter()
        .map(|g| {
            let reference = references.get(&g.record_id).ok_or_else(|| {
                RunError::new(Stage::Score, format!("generation for unknown record {}", g.record_id))
            })?;
            score_sample(&ctx, g.record_id, g.output(), reference).stage(Stage::Score)
        })
        .collect()
}

pub fn results_row(
    config: &RunConfig,
    scores: &[SampleScores],
    generations: &[GenerationResult],
) -> Result<(ResultsRow, CorpusScores), RunError> {
    let corpus = corpus_aggregate(scores).stage(Stage::Score)?;
    let row = ResultsRow {
        label: config.run.label.clone(),
        architecture: config.run.architecture.clone(),
        parameters: config.run.parameters.clone(),
        meteor: corpus.meteor,
        rouge1: corpus.rouge1,
        bertscore: corpus.bertscore,
        bleu: corpus.bleu,
        training_time_s: config.run.training_time_s,
        inference_time_s: aggregate_inference_time(generations).as_secs_f64(),
        sample_count: corpus.samples,
    };
    Ok((row, corpus))
}

/// Write `results.md`, `results.csv` and `results.json` into `dir`.
pub fn write_reports(dir: &Path, rows: &[ResultsRow]) -> Result<Vec<PathBuf>, RunError> {
    create_dir(dir, Stage::Report)?;
    let mut paths = Vec::new();
    for format in TableFormat::ALL {
        let text = render_table(rows, format).stage(Stage::Report)?;
        let path = dir.join(format!("results.{}", format.extension()));
        write_file(&path, &text, Stage::Report)?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config_sha256: String,
    pub seed: u64,
    pub style: String,
    pub template: String,
    pub endpoint: EndpointIdentity,
    pub test_split: PathBuf,
    pub test_split_sha256: String,
    pub counts: Counts,
    /// Resolved configuration; also written as `config.toml`.
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub formatted: usize,
    pub generated: usize,
    pub scored: usize,
    pub failed: usize,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ResultsRow,
    pub corpus: CorpusScores,
    pub scores: Vec<SampleScores>,
    pub generations: Vec<GenerationResult>,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

/// Dataset (when a dump is configured), prompts, generation, scoring and
/// reports, written to `run.out`.
pub async fn run_eval(config: &RunConfig) -> Result<RunOutcome, RunError> {
    config.validate().stage(Stage::Config)?;
    let out = config.run.out.clone();
    create_dir(&out, Stage::Config)?;
    let config_toml = toml::to_string(config).stage(Stage::Config)?;
    write_file(&out.join(CONFIG_FILE), &config_toml, Stage::Config)?;

    if config.dataset.dump.is_some() {
        let card = build_dataset_stage(config)?;
        tracing::info!(records = card.counts.records, test = card.counts.test, "dataset built");
    }
    let split = load_test_split(config)?;
    if split.records.is_empty() {
        return Err(RunError::new(Stage::Dataset, "the test split is empty"));
    }
    let examples = format_prompts(config, &split)?;
    jsonl::write_lines(out.join(PROMPTS_FILE), &examples).stage(Stage::Prompts)?;

    let (generations, endpoint) = generate(config, &examples).await?;
    jsonl::write_lines(out.join(GENERATIONS_FILE), &generations).stage(Stage::Generate)?;

    let scores = score(config, &examples, &generations)?;
    jsonl::write_lines(out.join(SCORES_FILE), &scores).stage(Stage::Score)?;
    let (row, corpus) = results_row(config, &scores, &generations)?;
    write_reports(&out, std::slice::from_ref(&row))?;

    let test_split = config.dataset.dir.join(SplitName::Test.file_name());
    let split_bytes = std::fs::read(&test_split)
        .map_err(|e| RunError::new(Stage::Report, format!("reading {}: {e}", test_split.display())))?;
    let manifest = Manifest {
        tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
        config_sha256: sha256_hex(config_toml.as_bytes()),
        seed: config.dataset.seed,
        style: config.prompt.style.to_string(),
        template: config.prompt.templates.get(config.prompt.style).to_string(),
        endpoint,
        test_split_sha256: sha256_hex(&split_bytes),
        test_split,
        counts: Counts {
            formatted: examples.len(),
            generated: generations.len(),
            scored: scores.len(),
            failed: corpus.failed,
        },
        config: config.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).stage(Stage::Report)? + "\n";
    write_file(&out.join(MANIFEST_FILE), &text, Stage::Report)?;
    Ok(RunOutcome {
        row,
        corpus,
        scores,
        generations,
        manifest,
        out_dir: out,
    })
}
