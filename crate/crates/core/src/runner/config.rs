//! Run configuration, read from TOML. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::SplitConfig;
use crate::gen::{EndpointConfig, GenerationRequest, RetryPolicy, DEFAULT_MAX_NEW_TOKENS};
use crate::metrics::MetricSet;
use crate::prompt::{PromptStyle, TemplateSet};

pub const DEFAULT_LIMIT: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {error}", .path.display())]
    Read { path: PathBuf, error: std::io::Error },
    #[error("invalid config {}: {error}", .path.display())]
    Parse { path: PathBuf, error: Box<toml::de::Error> },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Model name shown in the results table.
    pub label: String,
    pub architecture: String,
    pub parameters: String,
    /// Supplied by the user; nothing here trains.
    pub training_time_s: Option<f64>,
    /// Cap on the number of test records evaluated.
    pub limit: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            label: "model".into(),
            architecture: "-".into(),
            parameters: "-".into(),
            training_time_s: None,
            limit: DEFAULT_LIMIT,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// When set, the dataset is rebuilt from this dump before a run.
    pub dump: Option<PathBuf>,
    /// Directory holding `train.jsonl`, `dev.jsonl` and `test.jsonl`.
    pub dir: PathBuf,
    pub seed: u64,
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub test_fraction: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let s = SplitConfig::default();
        DatasetSection {
            dump: None,
            dir: PathBuf::from("dataset"),
            seed: s.seed,
            train_fraction: s.train_fraction,
            dev_fraction: s.dev_fraction,
            test_fraction: s.test_fraction,
        }
    }
}

impl DatasetSection {
    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            train_fraction: self.train_fraction,
            dev_fraction: self.dev_fraction,
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    pub style: PromptStyle,
    pub templates: TemplateSet,
}

impl Default for PromptSection {
    fn default() -> Self {
        PromptSection {
            style: PromptStyle::Natural,
            templates: TemplateSet::default(),
        }
    }
}

/// In-process mock to start instead of calling `base_url`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockKind {
    /// Reply to each prompt with its reference explanation.
    Reference,
    /// Reply with the prompt itself.
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSection {
    pub base_url: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub max_concurrent: usize,
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub multiplier: f64,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub stop: Vec<String>,
    pub mock: Option<MockKind>,
}

impl Default for EndpointSection {
    fn default() -> Self {
        let retry = RetryPolicy::default();
        EndpointSection {
            base_url: "http://127.0.0.1:8000".into(),
            model: "default".into(),
            api_key_env: None,
            timeout_secs: 60.0,
            max_concurrent: 4,
            max_attempts: retry.max_attempts,
            base_backoff_ms: retry.base_backoff.as_millis() as u64,
            multiplier: retry.multiplier,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: 0.0,
            stop: Vec::new(),
            mock: None,
        }
    }
}

impl EndpointSection {
    pub fn endpoint_config(&self) -> EndpointConfig {
        EndpointConfig {
            base_url: self.base_url.clone(),
            api_key_env: self.api_key_env.clone(),
            model_id: self.model.clone(),
            timeout: Duration::try_from_secs_f64(self.timeout_secs).unwrap_or(Duration::ZERO),
            max_concurrent: self.max_concurrent,
            retry: RetryPolicy {
                max_attempts: self.max_attempts,
                base_backoff: Duration::from_millis(self.base_backoff_ms),
                multiplier: self.multiplier,
            },
        }
    }

    pub fn request(&self, record_id: u64, input_text: &str) -> GenerationRequest {
        GenerationRequest {
            record_id,
            input_text: input_text.to_string(),
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            stop_sequences: self.stop.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub meteor: bool,
    pub rouge1: bool,
    pub bleu: bool,
    pub bertscore: bool,
    /// Token embedding file for BERTScore.
    pub embeddings: Option<PathBuf>,
    /// Weight BERTScore averages by reference-side IDF.
    pub idf: bool,
    /// Synonym table for METEOR's third stage.
    pub synonyms: Option<PathBuf>,
    pub bleu_max_n: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let m = MetricSet::default();
        MetricsSection {
            meteor: m.meteor,
            rouge1: m.rouge1,
            bleu: m.bleu,
            bertscore: m.bertscore,
            embeddings: None,
            idf: false,
            synonyms: None,
            bleu_max_n: 4,
        }
    }
}

impl MetricsSection {
    pub fn metric_set(&self) -> MetricSet {
        MetricSet {
            meteor: self.meteor,
            rouge1: self.rouge1,
            bleu: self.bleu,
            bertscore: self.bertscore,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub dataset: DatasetSection,
    pub prompt: PromptSection,
    pub endpoint: EndpointSection,
    pub metrics: MetricsSection,
}

/// Command-line values that replace config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub limit: Option<usize>,
    pub style: Option<PromptStyle>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parse a config file and resolve its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|error| ConfigError::Read {
            path: path.to_path_buf(),
            error,
        })?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|error| ConfigError::Parse {
            path: path.to_path_buf(),
            error: Box::new(error),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = std::path::absolute(base).unwrap_or_else(|_| base.to_path_buf());
        config.resolve_paths(&base);
        Ok(config)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|error| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            error: Box::new(error),
        })?;
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.run.out);
        fix(&mut self.dataset.dir);
        self.dataset.dump.as_mut().map(fix);
        self.metrics.embeddings.as_mut().map(fix);
        self.metrics.synonyms.as_mut().map(fix);
    }

    /// Flags win over file values. An explicit endpoint turns off the
    /// in-process mock.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(limit) = o.limit {
            self.run.limit = limit;
        }
        if let Some(style) = o.style {
            self.prompt.style = style;
        }
        if let Some(url) = &o.endpoint {
            self.endpoint.base_url = url.clone();
            self.endpoint.mock = None;
        }
        if let Some(model) = &o.model {
            self.endpoint.model = model.clone();
        }
        if let Some(out) = &o.out {
            self.run.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.dataset.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.run.limit == 0 {
            return invalid("run.limit must be at least 1".into());
        }
        if let Err(e) = self.dataset.split_config().validate() {
            return invalid(format!("dataset: {e}"));
        }
        if let Err(e) = self.prompt.templates.validate() {
            return invalid(format!("prompt: {e}"));
        }
        if self.endpoint.mock.is_none() {
            if let Err(e) = self.endpoint.endpoint_config().validate() {
                return invalid(format!("endpoint: {e}"));
            }
        }
        if let Err(e) = self.endpoint.request(0, "").validate() {
            return invalid(format!("endpoint: {e}"));
        }
        if self.metrics.bleu && self.metrics.bleu_max_n == 0 {
            return invalid("metrics.bleu_max_n must be at least 1".into());
        }
        self.check_metric_files()
    }

    /// Every file the metrics stage will open must exist.
    pub fn check_metric_files(&self) -> Result<(), ConfigError> {
        if self.metrics.bertscore {
            match &self.metrics.embeddings {
                None => {
                    return Err(ConfigError::Invalid(
                        "metrics.bertscore is enabled but no embedding file is set (metrics.embeddings)".into(),
                    ))
                }
                Some(p) if !p.is_file() => {
                    return Err(ConfigError::Invalid(format!(
                        "metrics.embeddings file {} does not exist",
                        p.display()
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(p) = &self.metrics.synonyms {
            if !p.is_file() {
                return Err(ConfigError::Invalid(format!(
                    "metrics.synonyms file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}
