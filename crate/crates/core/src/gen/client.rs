use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{EndpointConfig, FailureKind, GenError, GenerationRequest, GenerationResult, GenerationStatus};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    max_tokens: u32,
    temperature: f64,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    stop: &'a [String],
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

/// Outcome of one HTTP attempt.
enum Attempt {
    Done {
        text: String,
        usage: Option<Usage>,
    },
    Retry(FailureKind, String),
    Fatal(FailureKind, String),
}

/// Client for one endpoint. Cheap to share across tasks.
#[derive(Debug, Clone)]
pub struct GenClient {
    http: reqwest::Client,
    config: EndpointConfig,
    url: String,
    api_key: Option<String>,
}

impl GenClient {
    pub fn new(config: EndpointConfig) -> Result<Self, GenError> {
        config.validate()?;
        let http = reqwest::Client::builder().timeout(config.timeout).build()?;
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        Ok(GenClient {
            url: config.completions_url(),
            http,
            config,
            api_key,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    async fn attempt(&self, req: &GenerationRequest) -> Attempt {
        let body = ChatRequest {
            model: &self.config.model_id,
            messages: [Message {
                role: "user",
                content: &req.input_text,
            }],
            max_tokens: req.max_new_tokens,
            temperature: req.temperature,
            stop: &req.stop_sequences,
        };
        let mut builder = self.http.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send().await {
            Ok(r) => r,
            Err(e) => return transport_failure(e),
        };
        let status = response.status();
        let bytes = match response.bytes().await {
            Ok(b) => b,
            Err(e) => return transport_failure(e),
        };
        if !status.is_success() {
            let detail = format!("HTTP {status}: {}", String::from_utf8_lossy(&bytes[..bytes.len().min(200)]));
            return match status {
                StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Attempt::Fatal(FailureKind::Auth, detail),
                StatusCode::TOO_MANY_REQUESTS => Attempt::Retry(FailureKind::Http, detail),
                s if s.is_server_error() => Attempt::Retry(FailureKind::Http, detail),
                _ => Attempt::Fatal(FailureKind::Rejected, detail),
            };
        }
        match serde_json::from_slice::<ChatResponse>(&bytes) {
            Ok(ChatResponse { choices, usage }) => match choices.into_iter().next().and_then(|c| c.message.content) {
                Some(text) => Attempt::Done { text, usage },
                None => Attempt::Fatal(FailureKind::Protocol, "response has no choices[0].message.content".into()),
            },
            Err(e) => Attempt::Fatal(FailureKind::Protocol, format!("malformed response body: {e}")),
        }
    }

    /// Send one request, retrying 429, 5xx, timeouts and connection errors
    /// with exponential backoff.
    pub async fn generate(&self, req: &GenerationRequest) -> GenerationResult {
        let start = Instant::now();
        let mut backoff = Vec::new();
        let finish = |status, text: String, usage: Option<Usage>, attempts, backoff| GenerationResult {
            record_id: req.record_id,
            output_text: text,
            latency: start.elapsed().max(Duration::from_nanos(1)),
            prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens),
            status,
            attempts,
            backoff,
        };
        if let Err(detail) = req.validate() {
            let status = GenerationStatus::Failed {
                reason: FailureKind::Request,
                detail,
            };
            return finish(status, String::new(), None, 0, backoff);
        }
        let max = self.config.retry.max_attempts;
        let mut attempt = 1;
        loop {
            let (reason, detail) = match self.attempt(req).await {
                Attempt::Done { text, usage } => return finish(GenerationStatus::Ok, text, usage, attempt, backoff),
                Attempt::Fatal(reason, detail) => {
                    return finish(GenerationStatus::Failed { reason, detail }, String::new(), None, attempt, backoff)
                }
                Attempt::Retry(reason, detail) => (reason, detail),
            };
            if attempt >= max {
                return finish(GenerationStatus::Failed { reason, detail }, String::new(), None, attempt, backoff);
            }
            let wait = self.config.retry.delay(attempt);
            tracing::debug!(record_id = req.record_id, attempt, ?wait, %detail, "retrying");
            tokio::time::sleep(wait).await;
            backoff.push(wait);
            attempt += 1;
        }
    }

    /// Results come back in request order with at most `max_concurrent`
    /// requests in flight.
    pub async fn generate_batch(&self, reqs: &[GenerationRequest]) -> Vec<GenerationResult> {
        stream::iter(reqs)
            .map(|r| self.generate(r))
            .buffered(self.config.max_concurrent)
            .collect()
            .await
    }
}

fn transport_failure(e: reqwest::Error) -> Attempt {
    let kind = if e.is_timeout() {
        FailureKind::Timeout
    } else if e.is_connect() {
        FailureKind::Connect
    } else if e.is_builder() {
        return Attempt::Fatal(FailureKind::Request, e.to_string());
    } else {
        FailureKind::Connect
    };
    let mut detail = e.to_string();
    let mut source = std::error::Error::source(&e);
    while let Some(s) = source {
        detail.push_str(": ");
        detail.push_str(&s.to_string());
        source = s.source();
    }
    Attempt::Retry(kind, detail)
}

/// Run a batch on a private runtime. Must not be called from inside an
/// async context.
pub fn generate_batch_blocking(
    config: &EndpointConfig,
    reqs: &[GenerationRequest],
) -> Result<Vec<GenerationResult>, GenError> {
    let client = GenClient::new(config.clone())?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    Ok(rt.block_on(client.generate_batch(reqs)))
}

/// Total latency of successful generations.
pub fn aggregate_inference_time(results: &[GenerationResult]) -> Duration {
    results.iter().filter(|r| r.is_ok()).map(|r| r.latency).sum()
}
